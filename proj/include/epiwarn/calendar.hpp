#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace epiwarn {

// Calendar date, proleptic Gregorian. Validity is checked at construction sites
// (parse/make); arithmetic goes through day numbers (days since 1970-01-01).
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend auto operator<=>(const Date&, const Date&) = default;
};

struct MonthDay {
    int month = 1;
    int day = 1;

    friend auto operator<=>(const MonthDay&, const MonthDay&) = default;
};

struct DateRange {
    Date first;
    Date last;  // inclusive

    bool contains(const Date& d) const { return first <= d && d <= last; }
};

inline bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> k{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return k[static_cast<std::size_t>(m - 1)];
}

inline bool valid_date(int y, int m, int d) {
    return m >= 1 && m <= 12 && d >= 1 && d <= days_in_month(y, m);
}

inline std::int64_t day_number(const Date& d) {
    using namespace std::chrono;
    return sys_days(year_month_day(year(d.year), month(unsigned(d.month)), day(unsigned(d.day))))
        .time_since_epoch()
        .count();
}

inline Date date_from_day_number(std::int64_t n) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days(days(n))};
    return Date{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

inline Date add_days(const Date& d, std::int64_t n) {
    return date_from_day_number(day_number(d) + n);
}

// "YYYY-MM-DD"
inline std::optional<Date> parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (std::sscanf(std::string(s).c_str(), "%d-%d-%d", &y, &m, &d) != 3) return std::nullopt;
    if (!valid_date(y, m, d)) return std::nullopt;
    return Date{y, m, d};
}

// "MM-DD"
inline std::optional<MonthDay> parse_month_day(std::string_view s) {
    int m = 0, d = 0;
    if (s.size() != 5 || s[2] != '-') return std::nullopt;
    if (std::sscanf(std::string(s).c_str(), "%d-%d", &m, &d) != 2) return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(2000, m)) return std::nullopt;  // leap year: accept 02-29
    return MonthDay{m, d};
}

// ISO-8601 timestamp with 'Z' or '+HH:MM'/'-HH:MM' offset, second resolution.
// Returns seconds since the UNIX epoch (UTC).
inline std::optional<std::int64_t> parse_timestamp_utc(std::string_view s) {
    int y, mo, d, h, mi, se;
    std::string buf(s);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &se) != 6)
        return std::nullopt;
    if (!valid_date(y, mo, d) || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60)
        return std::nullopt;
    if (buf.size() < 20) return std::nullopt;
    std::string_view rest = std::string_view(buf).substr(19);
    std::int64_t offset = 0;
    if (rest == "Z") {
        // UTC
    } else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
        int oh = (rest[1] - '0') * 10 + (rest[2] - '0');
        int om = (rest[4] - '0') * 10 + (rest[5] - '0');
        if (oh > 23 || om > 59) return std::nullopt;
        offset = std::int64_t(oh) * 3600 + std::int64_t(om) * 60;
        if (rest[0] == '+') offset = -offset;  // local = UTC + off  =>  UTC = local - off
    } else {
        return std::nullopt;
    }
    std::int64_t days = day_number(Date{y, mo, d});
    return days * 86400 + h * 3600 + mi * 60 + se + offset;
}

inline Date utc_date_of(std::int64_t epoch_seconds) {
    std::int64_t dn = epoch_seconds / 86400;
    if (epoch_seconds < 0 && epoch_seconds % 86400 != 0) --dn;
    return date_from_day_number(dn);
}

inline std::string format_date(const Date& d, char sep = '-') {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d%c%02d%c%02d", d.year, sep, d.month, sep, d.day);
    return buf;
}

// ---------------------------------------------------------------------------
// Season axis: month-day aligned day indices shared across years.
//
// Winter seasons straddle the new year, so each season is identified by the
// year its autumn part falls in ("season 2019" = 2019-2020) and days are
// indexed from a fixed origin month-day (default 1 September). The axis uses
// a folded 365-day year: 29 February shares the index of 28 February, which
// keeps windows "starting and ending on the same days" equal in length
// across leap and common years.
// ---------------------------------------------------------------------------

inline constexpr MonthDay kSeasonAxisOrigin{9, 1};

// Day-of-year in the folded 365-day calendar (Jan 1 -> 0, Feb 29 -> index of Feb 28).
inline int folded_day_of_year(int m, int d) {
    static constexpr std::array<int, 12> cum{0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
    int x = cum[static_cast<std::size_t>(m - 1)] + d - 1;
    if (m == 2 && d == 29) x -= 1;
    return x;
}

// Index of a month-day on the season axis (0 = origin).
inline int season_axis_index(MonthDay md) {
    int x = folded_day_of_year(md.month, md.day) - folded_day_of_year(kSeasonAxisOrigin.month, kSeasonAxisOrigin.day);
    if (x < 0) x += 365;
    return x;
}

// Season that a calendar date belongs to: the year its on-axis origin fell in.
inline int season_year_of(const Date& d) {
    MonthDay md{d.month, d.day};
    int origin_doy = folded_day_of_year(kSeasonAxisOrigin.month, kSeasonAxisOrigin.day);
    return folded_day_of_year(md.month, md.day) >= origin_doy ? d.year : d.year - 1;
}

// Calendar date of axis index `idx` within season `season_year`.
// Folded indices map to the real calendar; the index of Feb 28 stands for
// both Feb 28 and (in leap years) Feb 29.
inline Date season_axis_date(int season_year, int idx) {
    Date origin{season_year, kSeasonAxisOrigin.month, kSeasonAxisOrigin.day};
    std::int64_t n = day_number(origin);
    // walk with leap correction: insert one extra real day after Feb 28 when crossed
    Date approx = date_from_day_number(n + idx);
    // if a Feb 29 lies strictly between origin and approx (inclusive), shift forward one day
    // find Feb 29 of the season's second year
    int feb_year = season_year + (kSeasonAxisOrigin.month > 2 ? 1 : 0);
    if (is_leap_year(feb_year)) {
        std::int64_t feb29 = day_number(Date{feb_year, 2, 29});
        std::int64_t target = n + idx;
        if (target >= feb29) {
            Date shifted = date_from_day_number(target + 1);
            // index semantics: idx of Feb 28 covers Feb 29 too, so idx pointing AT Feb 29 maps to Mar 1 ... etc.
            return shifted;
        }
    }
    return approx;
}

// Axis index of a calendar date within its season (Feb 29 folds onto Feb 28).
inline int season_axis_index_of(const Date& d) {
    return season_axis_index(MonthDay{d.month, d.day});
}

// Parse a season label "2019-2020" -> first year. Also accepts a bare year "2019".
inline std::optional<int> parse_season_label(std::string_view s) {
    int a = 0, b = 0;
    std::string buf(s);
    if (std::sscanf(buf.c_str(), "%d-%d", &a, &b) == 2) {
        if (b != a + 1) return std::nullopt;
        return a;
    }
    if (std::sscanf(buf.c_str(), "%d", &a) == 1 && s.size() == 4) return a;
    return std::nullopt;
}

inline std::string season_label(int season_year) {
    return std::to_string(season_year) + "-" + std::to_string(season_year + 1);
}

}  // namespace epiwarn
