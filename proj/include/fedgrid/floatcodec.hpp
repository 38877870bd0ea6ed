#pragma once

#include <string>

namespace fedgrid {

// Fixed-width decimal encoding of a finite double:
//   "+1.2345678901234567e+003"  (sign, 17 significant digits, 3-digit exponent)
// 17 significant digits round-trip IEEE doubles bit-exactly, and the constant
// 24-char width keeps encoded payload sizes independent of the values carried.
// The leading sign makes this invalid as a bare JSON number, so these travel
// as JSON strings.
inline constexpr std::size_t kFixedDoubleWidth = 24;

std::string format_fixed_double(double v);        // throws on non-finite input
bool try_parse_fixed_double(const std::string& text, double& out);

}  // namespace fedgrid
