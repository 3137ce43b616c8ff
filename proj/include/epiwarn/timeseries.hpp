#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epiwarn/calendar.hpp"
#include "epiwarn/georesolve.hpp"
#include "epiwarn/records.hpp"

namespace epiwarn {

enum class CountMode { messages, unique_users };

inline std::string_view count_mode_name(CountMode m) {
    return m == CountMode::messages ? "messages" : "unique_users";
}

// Message language decides the country bucket for authors the georesolver
// could not place (each study language maps to its home study country).
inline const std::map<std::string, std::string>& language_home_country() {
    static const std::map<std::string, std::string> k{{"de", "DE"}, {"en", "UK"}, {"es", "ES"},
                                                      {"fr", "FR"}, {"it", "IT"}, {"nl", "NL"},
                                                      {"pl", "PL"}};
    return k;
}

// Scope forms: a region code ("FR1"), a country code ("FR"), the
// language-fallback bucket of a country ("unresolved:FR"), or the
// cross-language pool ("all-countries"). A country series is, by
// construction, the sum of its region series plus its unresolved bucket.
struct SeriesKey {
    std::string scope;
    std::string keyword_set;
    CountMode mode = CountMode::messages;
};

struct DailySeries {
    SeriesKey key;
    Date start_date;
    std::vector<std::int64_t> values;  // consecutive days from start_date

    Date date_at(std::size_t i) const { return add_days(start_date, std::int64_t(i)); }

    std::int64_t at(const Date& d) const {
        const std::int64_t off = day_number(d) - day_number(start_date);
        if (off < 0 || off >= std::int64_t(values.size())) return 0;  // zero outside range
        return values[std::size_t(off)];
    }
};

namespace detail {

// The scope bucket one message falls into at country granularity, resolved
// region first, language fallback second.
inline std::string country_of_message(const MessageRecord& m, const Gazetteer& g,
                                      const ResolutionSet& resolutions) {
    if (const std::string* code = resolutions.region_of(m.author_id))
        if (const RegionId* region = g.find_code(*code)) return region->country;
    const auto it = language_home_country().find(m.language);
    return it == language_home_country().end() ? std::string{} : it->second;
}

inline bool message_in_scope(const MessageRecord& m, const std::string& scope,
                             const Gazetteer& g, const ResolutionSet& resolutions) {
    if (scope == "all-countries") return true;
    if (scope.rfind("unresolved:", 0) == 0) {
        if (resolutions.region_of(m.author_id)) return false;
        const auto it = language_home_country().find(m.language);
        return it != language_home_country().end() && it->second == scope.substr(11);
    }
    if (g.find_code(scope)) {  // region scope
        const std::string* code = resolutions.region_of(m.author_id);
        return code && *code == scope;
    }
    return country_of_message(m, g, resolutions) == scope;  // country scope
}

}  // namespace detail

// Count messages (or distinct authors per day) for one series key over the
// given date range. Empty scopes produce all-zero series.
inline DailySeries aggregate_daily(const std::vector<MessageRecord>& messages,
                                   const ResolutionSet& resolutions, const Gazetteer& g,
                                   const SeriesKey& key, const DateRange& range) {
    if (range.last < range.first) throw std::invalid_argument("empty date range");
    DailySeries s;
    s.key = key;
    s.start_date = range.first;
    const std::size_t days =
        std::size_t(day_number(range.last) - day_number(range.first)) + 1;
    s.values.assign(days, 0);
    std::vector<std::set<std::string>> seen;  // per-day author sets (unique_users mode)
    if (key.mode == CountMode::unique_users) seen.resize(days);
    for (const auto& m : messages) {
        if (m.matched_keyword_set != key.keyword_set) continue;
        if (!range.contains(m.posted_date)) continue;
        if (!detail::message_in_scope(m, key.scope, g, resolutions)) continue;
        const std::size_t off =
            std::size_t(day_number(m.posted_date) - day_number(range.first));
        if (key.mode == CountMode::messages) {
            ++s.values[off];
        } else if (seen[off].insert(m.author_id).second) {
            ++s.values[off];
        }
    }
    return s;
}

// A month-day-aligned comparison window, instantiated per season.
struct SeasonWindow {
    MonthDay anchor_start{12, 15};
    int width_days = 38;
    int season_year = 0;  // season "2019-2020" has season_year 2019
};

struct SeasonSlice {
    std::vector<std::int64_t> values;
    int padded_days = 0;  // window days the series did not cover (zero-filled)
};

namespace detail {

// Count on one season-axis day, with Feb 29 merged into Feb 28 so every
// season yields an equal-length vector.
inline std::int64_t axis_day_count(const DailySeries& s, int season_year, int axis_idx) {
    const Date d = season_axis_date(season_year, axis_idx);
    std::int64_t v = s.at(d);
    if (d.month == 2 && d.day == 28 && is_leap_year(d.year)) v += s.at(Date{d.year, 2, 29});
    return v;
}

inline bool series_covers(const DailySeries& s, const Date& d) {
    const std::int64_t off = day_number(d) - day_number(s.start_date);
    return off >= 0 && off < std::int64_t(s.values.size());
}

}  // namespace detail

inline SeasonSlice season_slice(const DailySeries& series, const SeasonWindow& window) {
    if (window.width_days < 1 || window.width_days > 120)
        throw std::invalid_argument("season window width outside [1,120]");
    SeasonSlice out;
    out.values.reserve(std::size_t(window.width_days));
    const int start_idx = season_axis_index(window.anchor_start);
    for (int i = 0; i < window.width_days; ++i) {
        const int idx = start_idx + i;
        if (idx >= 365) throw std::invalid_argument("season window crosses the axis origin");
        const Date d = season_axis_date(window.season_year, idx);
        if (!detail::series_covers(series, d)) ++out.padded_days;
        out.values.push_back(detail::axis_day_count(series, window.season_year, idx));
    }
    return out;
}

// The full 365-day season of a series on the folded axis (index 0 = the
// axis origin), zero-padded where the series has no data. This is what the
// moving-window scan slides over.
inline std::vector<std::int64_t> season_axis_counts(const DailySeries& series, int season_year) {
    std::vector<std::int64_t> out(365, 0);
    for (int idx = 0; idx < 365; ++idx)
        out[std::size_t(idx)] = detail::axis_day_count(series, season_year, idx);
    return out;
}

// Normalized running total: curve[i] = (counts up to i) / total. Ends at
// exactly 1 whenever the slice holds any mass.
inline std::vector<double> cumulative_rescaled(std::span<const std::int64_t> slice) {
    std::int64_t total = 0;
    for (const auto v : slice) {
        if (v < 0) throw std::invalid_argument("negative count");
        total += v;
    }
    if (total == 0) throw std::runtime_error("empty season");
    std::vector<double> curve;
    curve.reserve(slice.size());
    std::int64_t running = 0;
    for (const auto v : slice) {
        running += v;
        curve.push_back(double(running) / double(total));
    }
    return curve;
}

// Pointwise sum of per-language series into the cross-language pool.
inline DailySeries merge_across_languages(const std::vector<DailySeries>& series) {
    if (series.empty()) throw std::invalid_argument("nothing to merge");
    const DailySeries& first = series.front();
    DailySeries out;
    out.key = SeriesKey{"all-countries", first.key.keyword_set, first.key.mode};
    out.start_date = first.start_date;
    out.values = first.values;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const DailySeries& s = series[i];
        if (s.key.keyword_set != first.key.keyword_set || s.key.mode != first.key.mode ||
            s.start_date != first.start_date || s.values.size() != first.values.size())
            throw std::invalid_argument("merge requires identical keyword set, mode and range");
        for (std::size_t d = 0; d < out.values.size(); ++d) out.values[d] += s.values[d];
    }
    return out;
}

// ---- persistence: <root>/<keyword_set>/<scope>/<count_mode>.csv ----

inline std::filesystem::path series_path(const std::filesystem::path& root,
                                         const SeriesKey& key) {
    // ':' in bucket scopes is awkward in paths; keep it readable
    std::string scope = key.scope;
    std::replace(scope.begin(), scope.end(), ':', '-');
    return root / key.keyword_set / scope / (std::string(count_mode_name(key.mode)) + ".csv");
}

inline void write_series_csv(const std::filesystem::path& root, const DailySeries& s) {
    const auto path = series_path(root, s.key);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# scope=" << s.key.scope << "\n";
    out << "# keyword_set=" << s.key.keyword_set << "\n";
    out << "# count_mode=" << count_mode_name(s.key.mode) << "\n";
    out << "date,count\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        out << format_date(s.date_at(i)) << ',' << s.values[i] << '\n';
}

inline DailySeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    DailySeries s;
    std::string line;
    bool have_start = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = trim(line.substr(1));
            if (body.rfind("scope=", 0) == 0) s.key.scope = body.substr(6);
            else if (body.rfind("keyword_set=", 0) == 0) s.key.keyword_set = body.substr(12);
            else if (body.rfind("count_mode=", 0) == 0)
                s.key.mode = body.substr(11) == "unique_users" ? CountMode::unique_users
                                                               : CountMode::messages;
            continue;
        }
        if (line.rfind("date,", 0) == 0) continue;  // header row
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("bad series row: " + line);
        const auto date = parse_date(line.substr(0, comma));
        if (!date) throw std::runtime_error("bad series date: " + line);
        if (!have_start) {
            s.start_date = *date;
            have_start = true;
        }
        s.values.push_back(std::stoll(line.substr(comma + 1)));
    }
    return s;
}

}  // namespace epiwarn
