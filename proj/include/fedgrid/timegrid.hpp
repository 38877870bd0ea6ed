#pragma once

#include <cstdint>
#include <string>

namespace fedgrid {

// Minute-resolution timestamp: minutes since 1970-01-01 00:00 UTC.
using MinuteTime = std::int64_t;

inline constexpr int kStepMinutes = 15;
inline constexpr int kSlotsPerDay = 96;   // 24 h / 15 min
inline constexpr int kMinutesPerDay = 1440;

struct CivilDate {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

struct YearMonth {
    int year = 1970;
    unsigned month = 1;

    auto operator<=>(const YearMonth&) const = default;
};

MinuteTime minutes_from_civil(const CivilDate& d, int hour = 0, int minute = 0);
CivilDate civil_from_minutes(MinuteTime t);

// 0 = Monday .. 6 = Sunday.
int day_of_week(MinuteTime t);
inline bool is_weekend(MinuteTime t) { return day_of_week(t) >= 5; }

// Minute of day in [0, 1440); 15-min slot in [0, 96).
inline int minute_of_day(MinuteTime t) {
    MinuteTime m = t % kMinutesPerDay;
    if (m < 0) m += kMinutesPerDay;
    return static_cast<int>(m);
}
inline int slot_of_day(MinuteTime t) { return minute_of_day(t) / kStepMinutes; }

// Midnight of the day containing t.
inline MinuteTime start_of_day(MinuteTime t) { return t - minute_of_day(t); }

MinuteTime first_minute_of_month(const YearMonth& ym);
YearMonth month_of(MinuteTime t);
YearMonth next_month(const YearMonth& ym);

// Accepts RFC 3339 ("2023-05-01T06:15:00Z", seconds optional, offset must be Z
// or absent) and "2023-05-01 06:15". Sub-minute parts must be zero.
// Returns false if the text matches neither format.
bool try_parse_timestamp(const std::string& text, MinuteTime& out);

// RFC 3339 with seconds, UTC: "2023-05-01T06:15:00Z".
std::string format_timestamp(MinuteTime t);
std::string format_date(const CivilDate& d);

// "YYYY-MM" -> YearMonth; returns false on malformed input.
bool try_parse_year_month(const std::string& text, YearMonth& out);

}  // namespace fedgrid
