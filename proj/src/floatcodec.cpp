#include "fedgrid/floatcodec.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "fedgrid/errors.hpp"

namespace fedgrid {

std::string format_fixed_double(double v) {
    if (!std::isfinite(v)) throw InvalidParameterError("cannot encode non-finite value");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%+.16e", v);
    std::string s(buf);
    // Pad the exponent to exactly 3 digits ("e+05" -> "e+005").
    auto epos = s.find('e');
    std::string mant = s.substr(0, epos);
    std::string exp = s.substr(epos + 1);  // like "+05" or "-308"
    char esign = exp[0];
    std::string digits = exp.substr(1);
    while (digits.size() < 3) digits.insert(digits.begin(), '0');
    std::string out = mant + "e" + esign + digits;
    return out;
}

bool try_parse_fixed_double(const std::string& text, double& out) {
    if (text.size() != kFixedDoubleWidth) return false;
    if (text[0] != '+' && text[0] != '-') return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) return false;
    return std::isfinite(out);
}

}  // namespace fedgrid
