#include "fedgrid/timegrid.hpp"

#include <chrono>
#include <cstdio>

namespace fedgrid {

namespace {
namespace chr = std::chrono;

chr::sys_days to_sys_days(const CivilDate& d) {
    return chr::sys_days{chr::year{d.year} / chr::month{d.month} / chr::day{d.day}};
}
}  // namespace

MinuteTime minutes_from_civil(const CivilDate& d, int hour, int minute) {
    auto days = to_sys_days(d).time_since_epoch().count();
    return static_cast<MinuteTime>(days) * kMinutesPerDay + hour * 60 + minute;
}

CivilDate civil_from_minutes(MinuteTime t) {
    MinuteTime day = (t - minute_of_day(t)) / kMinutesPerDay;
    chr::year_month_day ymd{chr::sys_days{chr::days{day}}};
    return CivilDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day())};
}

int day_of_week(MinuteTime t) {
    MinuteTime day = (t - minute_of_day(t)) / kMinutesPerDay;
    // 1970-01-01 was a Thursday (ISO weekday 3, Monday = 0).
    MinuteTime dow = (day + 3) % 7;
    if (dow < 0) dow += 7;
    return static_cast<int>(dow);
}

MinuteTime first_minute_of_month(const YearMonth& ym) {
    return minutes_from_civil(CivilDate{ym.year, ym.month, 1});
}

YearMonth month_of(MinuteTime t) {
    CivilDate d = civil_from_minutes(t);
    return YearMonth{d.year, d.month};
}

YearMonth next_month(const YearMonth& ym) {
    if (ym.month == 12) return YearMonth{ym.year + 1, 1};
    return YearMonth{ym.year, ym.month + 1};
}

bool try_parse_timestamp(const std::string& text, MinuteTime& out) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    int pos = -1;
    // "YYYY-MM-DD[T ]HH:MM" with optional ":SS" and optional trailing "Z".
    int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &pos);
    if (n != 6 || (sep != 'T' && sep != ' ')) return false;
    std::string rest = text.substr(static_cast<std::size_t>(pos));
    if (!rest.empty() && rest[0] == ':') {
        int pos2 = -1;
        if (std::sscanf(rest.c_str(), ":%2d%n", &s, &pos2) != 1) return false;
        rest = rest.substr(static_cast<std::size_t>(pos2));
    }
    if (rest == "Z") rest.clear();
    if (!rest.empty()) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) return false;
    if (s < 0 || s > 59) return false;
    // Reject nonexistent dates (e.g. Feb 30) by round-tripping.
    CivilDate cd{y, static_cast<unsigned>(mo), static_cast<unsigned>(d)};
    MinuteTime t = minutes_from_civil(cd, h, mi);
    if (civil_from_minutes(t) != cd) return false;
    if (s != 0) return false;  // sub-minute timestamps are not representable
    out = t;
    return true;
}

std::string format_timestamp(MinuteTime t) {
    CivilDate d = civil_from_minutes(t);
    int mod = minute_of_day(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:00Z", d.year, d.month, d.day,
                  mod / 60, mod % 60);
    return buf;
}

std::string format_date(const CivilDate& d) {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

bool try_parse_year_month(const std::string& text, YearMonth& out) {
    int y = 0, m = 0;
    int pos = -1;
    if (std::sscanf(text.c_str(), "%4d-%2d%n", &y, &m, &pos) != 2) return false;
    if (pos != static_cast<int>(text.size())) return false;
    if (m < 1 || m > 12) return false;
    out = YearMonth{y, static_cast<unsigned>(m)};
    return true;
}

}  // namespace fedgrid
