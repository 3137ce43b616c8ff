#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epiwarn/calendar.hpp"
#include "epiwarn/filters.hpp"
#include "epiwarn/ingest.hpp"
#include "epiwarn/stats/scan.hpp"
#include "epiwarn/text.hpp"

namespace epiwarn {

// Minimal INI-style key-value config: `[section]` headers, `key = value`
// lines, '#' or ';' comments. Repeated keys accumulate (used for lists);
// section order is preserved.
struct IniFile {
    std::vector<std::string> section_order;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

    bool has_section(const std::string& name) const { return sections.count(name) != 0; }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        const auto it = sections.find(section);
        if (it == sections.end()) return std::nullopt;
        std::optional<std::string> out;
        for (const auto& [k, v] : it->second)
            if (k == key) out = v;  // last assignment wins
        return out;
    }

    std::vector<std::string> get_all(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        const auto it = sections.find(section);
        if (it == sections.end()) return out;
        for (const auto& [k, v] : it->second)
            if (k == key) out.push_back(v);
        return out;
    }
};

inline IniFile parse_ini(std::istream& in, const std::string& origin = "<config>") {
    IniFile f;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const auto fail = [&](const char* why) {
            return std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + why);
        };
        if (t.front() == '[') {
            if (t.back() != ']') throw fail("unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw fail("empty section name");
            if (!f.sections.count(section)) f.section_order.push_back(section);
            f.sections[section];  // materialize even if empty
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw fail("expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw fail("empty key");
        if (section.empty()) throw fail("key outside any section");
        f.sections[section].emplace_back(key, value);
    }
    return f;
}

inline IniFile load_ini(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config " + path);
    return parse_ini(in, path);
}

// ---- typed access helpers ----

namespace detail {

inline std::int64_t to_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + what + " is not an integer: '" + s + "'");
    }
}

inline double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + what + " is not a number: '" + s + "'");
    }
}

inline bool to_bool(const std::string& s, const std::string& what) {
    if (s == "on" || s == "true" || s == "yes" || s == "1") return true;
    if (s == "off" || s == "false" || s == "no" || s == "0") return false;
    throw std::runtime_error("config: " + what + " is not a flag: '" + s + "'");
}

inline Date to_date(const std::string& s, const std::string& what) {
    const auto d = parse_date(s);
    if (!d) throw std::runtime_error("config: " + what + " is not a date: '" + s + "'");
    return *d;
}

inline MonthDay to_month_day(const std::string& s, const std::string& what) {
    const auto md = parse_month_day(s);
    if (!md) throw std::runtime_error("config: " + what + " is not a month-day: '" + s + "'");
    return *md;
}

}  // namespace detail

// ---- shipped defaults ----

// Keyword groups in the seven languages. These select messages into the
// per-group series; the terms are matched on folded code points.
inline std::vector<KeywordSet> default_keyword_sets() {
    std::vector<KeywordSet> sets;
    {
        KeywordSet s;
        s.id = "pneumonia";
        s.terms_by_language = {
            {"de", {"lungenentzündung"}}, {"en", {"pneumonia"}},
            {"es", {"neumonía", "pulmonía"}}, {"fr", {"pneumonie"}},
            {"it", {"polmonite"}}, {"nl", {"longontsteking"}},
            {"pl", {"zapalenie płuc"}},
        };
        sets.push_back(std::move(s));
    }
    {
        KeywordSet s;
        s.id = "dry_cough";
        s.terms_by_language = {
            {"de", {"trockener husten"}}, {"en", {"dry cough"}},
            {"es", {"tos seca"}}, {"fr", {"toux sèche"}},
            {"it", {"tosse secca"}}, {"nl", {"droge hoest"}},
            {"pl", {"suchy kaszel"}},
        };
        sets.push_back(std::move(s));
    }
    {
        KeywordSet s;
        s.id = "coronavirus";
        s.terms_by_language = {
            {"de", {"coronavirus"}}, {"en", {"coronavirus"}},
            {"es", {"coronavirus"}}, {"fr", {"coronavirus"}},
            {"it", {"coronavirus"}}, {"nl", {"coronavirus"}},
            {"pl", {"koronawirus"}},
        };
        sets.push_back(std::move(s));
    }
    return sets;
}

// News-topic exclusion terms per language (reconstruction; editable in the
// config under [filters.exclude.<lang>]).
inline std::map<std::string, std::vector<std::string>> default_exclusion_lists() {
    return {
        {"de", {"coronavirus", "china", "covid"}},
        {"en", {"coronavirus", "china", "covid"}},
        {"es", {"coronavirus", "china", "covid"}},
        {"fr", {"coronavirus", "chine", "covid"}},
        {"it", {"coronavirus", "cina", "covid"}},
        {"nl", {"coronavirus", "china", "covid"}},
        {"pl", {"koronawirus", "chiny", "covid"}},
    };
}

// ---- pipeline configuration ----

struct PipelineConfig {
    IngestOptions ingest;
    FilterPolicy filters;
    MonthDay anchor_start{12, 15};
    MonthDay anchor_end{1, 21};
    int focal_season = 2019;            // season "2019-2020"
    std::vector<int> baseline_seasons;  // e.g. 2014..2018
    ScanParams scan;
    std::vector<double> alphas{0.05, 0.10};
    Date news_cutoff{2020, 1, 21};  // anomalies starting after this date are news-era
    std::string gazetteer_path;
    std::string boundaries_path;  // optional
    std::string out_dir;
    std::uint64_t config_hash = 0;

    int anchor_width_days() const {
        int w = season_axis_index(anchor_end) - season_axis_index(anchor_start) + 1;
        if (w <= 0) w += 365;
        return w;
    }
};

inline std::uint64_t fnv1a_64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[std::size_t(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

// Keyword sets from [keywords.<set>.<lang>] sections (repeated `term` keys),
// in first-appearance order of the set ids; defaults when none configured.
inline std::vector<KeywordSet> keyword_sets_from_ini(const IniFile& ini) {
    std::vector<KeywordSet> sets;
    for (const auto& section : ini.section_order) {
        if (section.rfind("keywords.", 0) != 0) continue;
        const std::string rest = section.substr(9);
        const auto dot = rest.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size())
            throw std::runtime_error("config: bad keyword section [" + section +
                                     "]; expected [keywords.<set>.<lang>]");
        const std::string set_id = rest.substr(0, dot);
        const std::string lang = rest.substr(dot + 1);
        if (!is_study_language(lang))
            throw std::runtime_error("config: keyword section for unknown language " + lang);
        auto it = std::find_if(sets.begin(), sets.end(),
                               [&](const KeywordSet& s) { return s.id == set_id; });
        if (it == sets.end()) {
            sets.push_back(KeywordSet{set_id, {}});
            it = std::prev(sets.end());
        }
        auto terms = ini.get_all(section, "term");
        if (terms.empty())
            throw std::runtime_error("config: [" + section + "] has no term entries");
        it->terms_by_language[lang] = std::move(terms);
    }
    return sets.empty() ? default_keyword_sets() : sets;
}

inline PipelineConfig pipeline_config_from_ini(const IniFile& ini,
                                               const std::string& config_dir = ".") {
    using detail::to_bool;
    using detail::to_date;
    using detail::to_double;
    using detail::to_int;
    using detail::to_month_day;
    PipelineConfig c;

    c.ingest.keyword_sets = keyword_sets_from_ini(ini);
    if (const auto v = ini.get("study", "first")) c.ingest.study_range.first = to_date(*v, "study.first");
    if (const auto v = ini.get("study", "last")) c.ingest.study_range.last = to_date(*v, "study.last");
    if (const auto v = ini.get("ingest", "corrupt_threshold"))
        c.ingest.corrupt_threshold = to_double(*v, "ingest.corrupt_threshold");
    if (ini.has_section("schema")) {
        const auto map_field = [&](const char* key, std::string& slot) {
            if (const auto v = ini.get("schema", key)) slot = *v;
        };
        map_field("id", c.ingest.schema.id);
        map_field("user_id", c.ingest.schema.user_id);
        map_field("created_at", c.ingest.schema.created_at);
        map_field("text", c.ingest.schema.text);
        map_field("lang", c.ingest.schema.lang);
        map_field("followers_count", c.ingest.schema.followers_count);
        map_field("location", c.ingest.schema.location);
        map_field("friends_count", c.ingest.schema.friends_count);
        map_field("statuses_count", c.ingest.schema.statuses_count);
        map_field("lat", c.ingest.schema.lat);
        map_field("lon", c.ingest.schema.lon);
        map_field("keyword_set", c.ingest.schema.keyword_set);
    }

    if (const auto v = ini.get("filters", "url_filter"))
        c.filters.url_filter_on = to_bool(*v, "filters.url_filter");
    if (const auto v = ini.get("filters", "follower_cap"))
        c.filters.follower_cap = to_int(*v, "filters.follower_cap");
    if (const auto v = ini.get("filters", "case_fold"))
        c.filters.case_fold = to_bool(*v, "filters.case_fold");
    if (const auto v = ini.get("filters", "exclude_until")) {
        if (*v == "never")
            c.filters.applies_to_window = std::nullopt;
        else
            c.filters.applies_to_window =
                DateRange{Date{1, 1, 1}, to_date(*v, "filters.exclude_until")};
    }
    bool any_exclusion_section = false;
    for (const auto& section : ini.section_order) {
        if (section.rfind("filters.exclude.", 0) != 0) continue;
        any_exclusion_section = true;
        const std::string lang = section.substr(16);
        if (!is_study_language(lang))
            throw std::runtime_error("config: exclusion section for unknown language " + lang);
        auto terms = ini.get_all(section, "term");
        if (terms.empty())
            throw std::runtime_error("config: [" + section + "] has no term entries");
        c.filters.excluded_keywords[lang] = std::move(terms);
    }
    if (!any_exclusion_section) c.filters.excluded_keywords = default_exclusion_lists();

    if (const auto v = ini.get("season", "anchor_start"))
        c.anchor_start = to_month_day(*v, "season.anchor_start");
    if (const auto v = ini.get("season", "anchor_end"))
        c.anchor_end = to_month_day(*v, "season.anchor_end");
    if (const auto v = ini.get("season", "focal")) {
        const auto y = parse_season_label(*v);
        if (!y) throw std::runtime_error("config: bad season label '" + *v + "'");
        c.focal_season = *y;
    }
    c.baseline_seasons.clear();
    for (const auto& label : ini.get_all("season", "baseline")) {
        const auto y = parse_season_label(label);
        if (!y) throw std::runtime_error("config: bad season label '" + label + "'");
        c.baseline_seasons.push_back(*y);
    }
    if (c.baseline_seasons.empty())
        c.baseline_seasons = {c.focal_season - 5, c.focal_season - 4, c.focal_season - 3,
                              c.focal_season - 2, c.focal_season - 1};

    if (const auto v = ini.get("scan", "width_min")) c.scan.width_min = int(to_int(*v, "scan.width_min"));
    if (const auto v = ini.get("scan", "width_max")) c.scan.width_max = int(to_int(*v, "scan.width_max"));
    if (const auto v = ini.get("scan", "method")) {
        if (*v == "ks") c.scan.method = TestMethod::ks;
        else if (*v == "ad") c.scan.method = TestMethod::ad;
        else throw std::runtime_error("config: scan.method must be ks or ad");
    }
    if (const auto v = ini.get("scan", "sample_mode")) {
        if (*v == "message_mass") c.scan.sample_mode = SampleMode::message_mass;
        else if (*v == "day_values") c.scan.sample_mode = SampleMode::day_values;
        else throw std::runtime_error("config: scan.sample_mode must be message_mass or day_values");
    }
    if (const auto v = ini.get("scan", "exact_crossover"))
        c.scan.exact_crossover = to_int(*v, "scan.exact_crossover");
    const auto alphas = ini.get_all("scan", "alpha");
    if (!alphas.empty()) {
        c.alphas.clear();
        for (const auto& a : alphas) {
            const double alpha = to_double(a, "scan.alpha");
            if (!(alpha > 0.0 && alpha < 1.0))
                throw std::runtime_error("config: alpha outside (0,1)");
            c.alphas.push_back(alpha);
        }
    }

    if (const auto v = ini.get("report", "news_cutoff"))
        c.news_cutoff = to_date(*v, "report.news_cutoff");
    else if (c.filters.applies_to_window)
        c.news_cutoff = c.filters.applies_to_window->last;

    const auto resolve_path = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string()
                                : (std::filesystem::path(config_dir) / fp).string();
    };
    if (const auto v = ini.get("paths", "gazetteer")) c.gazetteer_path = resolve_path(*v);
    if (const auto v = ini.get("paths", "boundaries")) c.boundaries_path = resolve_path(*v);
    if (const auto v = ini.get("paths", "out")) c.out_dir = *v;

    for (const auto& p : {c.gazetteer_path, c.boundaries_path})
        if (!p.empty() && !std::filesystem::exists(p))
            throw std::runtime_error("config: referenced path does not exist: " + p);
    return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    std::istringstream stream(bytes);
    const IniFile ini = parse_ini(stream, path);
    PipelineConfig c = pipeline_config_from_ini(
        ini, std::filesystem::path(path).parent_path().string().empty()
                 ? "."
                 : std::filesystem::path(path).parent_path().string());
    c.config_hash = fnv1a_64(bytes);
    return c;
}

}  // namespace epiwarn
