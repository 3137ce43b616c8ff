#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiwarn/calendar.hpp"
#include "epiwarn/config.hpp"
#include "epiwarn/georesolve.hpp"
#include "epiwarn/records.hpp"
#include "epiwarn/timeseries.hpp"

namespace epiwarn {

// Counter-based generator: every draw is a pure function of (seed, counters),
// so output is reproducible across platforms and independent of call order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t prf(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ull));
    h = splitmix64(h ^ (b * 0xc2b2ae3d27d4eb4full));
    return splitmix64(h ^ (c * 0x165667b19e3779f9ull));
}

// Symmetric bounded jitter in [-j, +j]: popcount of 2j fair bits minus j.
// Keeps day counts close to the planned rate (variance j/2), which makes
// quiet scenarios genuinely quiet.
inline std::int64_t bounded_jitter(std::uint64_t bits, int j) {
    if (j <= 0) return 0;
    const int width = 2 * j;
    const std::uint64_t mask = width >= 64 ? ~0ull : ((1ull << width) - 1);
    return std::int64_t(std::popcount(bits & mask)) - j;
}

struct SurgeSpec {
    std::string region;
    Date first{};
    Date last{};
    double multiplier = 1.0;
};

// One region receiving a share of a language's located messages.
struct RegionShare {
    std::string code;
    std::string country;
    std::string name;  // written to author profiles as the location string
    double weight = 1.0;
    std::optional<GeoPoint> point;  // representative interior point, if any
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    std::vector<int> season_years;  // season start years, ascending
    double base_rate = 20.0;        // organic messages per day per language
    double seasonal_amplitude = 0.25;
    int jitter = 3;
    std::optional<SurgeSpec> surge;
    double frac_url = 0.10;      // planted posts carrying a link
    double frac_overcap = 0.05;  // planted posts from broadcast-sized accounts
    double frac_keyword = 0.05;  // planted posts carrying a news-topic term
    double frac_unlocated = 0.10;
    double duplicate_frac = 0.02;
    std::vector<RegionShare> regions;
    std::vector<std::string> languages{"it"};
    std::string keyword_set_id = "pneumonia";
    std::map<std::string, std::string> organic_term;   // language -> planted group term
    std::map<std::string, std::string> excluded_term;  // language -> planted news term
    MonthDay emit_start{10, 1};  // generate from Oct 1 of the season year ...
    MonthDay emit_end{3, 1};     // ... through Mar 1 of the next
    int author_pool = 40;        // organic authors per (language, region)
    int surge_pool = 25;         // dedicated authors for surge excess

    void validate() const {
        if (season_years.empty()) throw std::invalid_argument("scenario: no seasons");
        for (std::size_t i = 1; i < season_years.size(); ++i)
            if (season_years[i] <= season_years[i - 1])
                throw std::invalid_argument("scenario: seasons must be ascending and unique");
        if (base_rate < 0.0) throw std::invalid_argument("scenario: negative base rate");
        if (seasonal_amplitude < 0.0 || seasonal_amplitude >= 1.0)
            throw std::invalid_argument("scenario: amplitude outside [0,1)");
        if (jitter < 0 || jitter > 31) throw std::invalid_argument("scenario: jitter outside [0,31]");
        for (const double f : {frac_url, frac_overcap, frac_keyword, frac_unlocated, duplicate_frac})
            if (f < 0.0 || f >= 1.0) throw std::invalid_argument("scenario: fraction outside [0,1)");
        if (frac_url + frac_overcap + frac_keyword > 1.0)
            throw std::invalid_argument("scenario: noise fractions exceed 1");
        if (languages.empty()) throw std::invalid_argument("scenario: no languages");
        for (const auto& l : languages)
            if (!is_study_language(l))
                throw std::invalid_argument("scenario: unknown language " + l);
        if (regions.empty()) throw std::invalid_argument("scenario: no regions");
        for (const auto& r : regions) {
            if (!(r.weight > 0.0)) throw std::invalid_argument("scenario: region weight must be positive");
            if (std::find(kStudyCountries.begin(), kStudyCountries.end(), r.country) ==
                kStudyCountries.end())
                throw std::invalid_argument("scenario: region country outside study set: " + r.country);
        }
        if (surge) {
            if (surge->multiplier < 1.0)
                throw std::invalid_argument("scenario: surge multiplier below 1");
            if (surge->last < surge->first)
                throw std::invalid_argument("scenario: surge interval reversed");
            const bool known = std::any_of(regions.begin(), regions.end(),
                                           [&](const RegionShare& r) { return r.code == surge->region; });
            if (!known) throw std::invalid_argument("scenario: surge region not in region mix");
        }
        if (author_pool < 1 || surge_pool < 1)
            throw std::invalid_argument("scenario: author pools must be positive");
    }

    std::string term_for(const std::string& lang) const {
        if (const auto it = organic_term.find(lang); it != organic_term.end()) return it->second;
        for (const auto& set : default_keyword_sets())
            if (set.id == keyword_set_id) {
                const auto jt = set.terms_by_language.find(lang);
                if (jt != set.terms_by_language.end() && !jt->second.empty())
                    return jt->second.front();
            }
        throw std::invalid_argument("scenario: no planted term for language " + lang);
    }

    std::string news_term_for(const std::string& lang) const {
        if (const auto it = excluded_term.find(lang); it != excluded_term.end()) return it->second;
        const auto lists = default_exclusion_lists();
        const auto it = lists.find(lang);
        if (it == lists.end() || it->second.empty())
            throw std::invalid_argument("scenario: no news term for language " + lang);
        return it->second.front();
    }
};

// Ground-truth counts for one (date, language, region) cell. region == ""
// is the unlocated bucket; planted noise lives there too.
struct PlanRow {
    Date date{};
    int season_year = 0;
    std::string lang;
    std::string region;
    std::string country;
    std::int64_t organic = 0;
    std::int64_t surge_extra = 0;
    std::int64_t url = 0;
    std::int64_t overcap = 0;
    std::int64_t keyword = 0;
};

namespace detail {

// Triangle wave over the folded season axis, peaking mid-January; in [-1, 1].
// Plain arithmetic only, so identical on every IEEE platform.
inline double season_wave(int axis_index) {
    const int peak = season_axis_index(MonthDay{1, 15});
    int dist = axis_index - peak;
    if (dist < 0) dist = -dist;
    if (365 - dist < dist) dist = 365 - dist;
    return 1.0 - (2.0 * double(dist)) / 182.5;
}

inline std::int64_t round_nonneg(double x) {
    return x <= 0.0 ? 0 : std::int64_t(x + 0.5);
}

// Largest-remainder apportionment of n over weights (ties broken by slot
// order). Exact: shares always sum to n.
inline std::vector<std::int64_t> apportion(std::int64_t n, const std::vector<double>& weights) {
    std::vector<std::int64_t> share(weights.size(), 0);
    double total = 0.0;
    for (const double w : weights) total += w;
    if (n <= 0 || total <= 0.0) return share;
    std::vector<double> frac(weights.size(), 0.0);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double target = double(n) * (weights[i] / total);
        share[i] = std::int64_t(target);
        frac[i] = target - double(share[i]);
        assigned += share[i];
    }
    std::vector<std::size_t> order(weights.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < n; ++k) {
        share[order[k % order.size()]] += 1;
        ++assigned;
    }
    return share;
}

}  // namespace detail

// Tags keep the per-purpose draw streams disjoint.
enum : std::uint64_t {
    kDrawDayCount = 1,
    kDrawDuplicate = 2,
};

inline std::vector<PlanRow> generate_plan(const ScenarioSpec& spec) {
    spec.validate();
    std::vector<PlanRow> plan;
    for (const auto& season : spec.season_years) {
        const Date first{season, spec.emit_start.month, spec.emit_start.day};
        const Date last{season + 1, spec.emit_end.month, spec.emit_end.day};
        for (std::int64_t dn = day_number(first); dn <= day_number(last); ++dn) {
            const Date date = date_from_day_number(dn);
            const int axis = season_axis_index_of(date);
            for (std::size_t li = 0; li < spec.languages.size(); ++li) {
                const std::string& lang = spec.languages[li];
                const std::string home = language_home_country().at(lang);
                const double rate =
                    spec.base_rate * (1.0 + spec.seasonal_amplitude * detail::season_wave(axis));
                std::int64_t organic =
                    detail::round_nonneg(rate) +
                    bounded_jitter(prf(spec.seed, kDrawDayCount, std::uint64_t(dn), li), spec.jitter);
                if (organic < 0) organic = 0;

                // Located slots: regions in this language's home country.
                std::vector<const RegionShare*> slots;
                double located_weight = 0.0;
                for (const auto& r : spec.regions)
                    if (r.country == home) {
                        slots.push_back(&r);
                        located_weight += r.weight;
                    }
                std::vector<double> weights;
                weights.reserve(slots.size() + 1);
                for (const auto* r : slots) weights.push_back(r->weight * (1.0 - spec.frac_unlocated));
                weights.push_back(slots.empty() ? 1.0 : located_weight * spec.frac_unlocated);
                const auto shares = detail::apportion(organic, weights);

                const bool surge_day = spec.surge && spec.surge->first <= date &&
                                       date <= spec.surge->last &&
                                       std::any_of(slots.begin(), slots.end(), [&](const RegionShare* r) {
                                           return r->code == spec.surge->region;
                                       });
                const std::int64_t extra =
                    surge_day ? detail::round_nonneg((spec.surge->multiplier - 1.0) * double(organic))
                              : 0;

                for (std::size_t si = 0; si < slots.size(); ++si) {
                    if (shares[si] == 0 && !(surge_day && slots[si]->code == spec.surge->region))
                        continue;
                    PlanRow row;
                    row.date = date;
                    row.season_year = season;
                    row.lang = lang;
                    row.region = slots[si]->code;
                    row.country = slots[si]->country;
                    row.organic = shares[si];
                    if (surge_day && slots[si]->code == spec.surge->region) row.surge_extra = extra;
                    plan.push_back(std::move(row));
                }

                PlanRow bucket;
                bucket.date = date;
                bucket.season_year = season;
                bucket.lang = lang;
                bucket.region = "";
                bucket.country = home;
                bucket.organic = shares.back();
                bucket.url = detail::round_nonneg(spec.frac_url * double(organic));
                bucket.overcap = detail::round_nonneg(spec.frac_overcap * double(organic));
                bucket.keyword = detail::round_nonneg(spec.frac_keyword * double(organic));
                if (bucket.organic || bucket.url || bucket.overcap || bucket.keyword)
                    plan.push_back(std::move(bucket));
            }
        }
    }
    return plan;
}

// Post-filter daily total for one country (what the pipeline's country series
// should recover after filtering and resolution).
inline std::map<Date, std::int64_t> plan_country_series(const std::vector<PlanRow>& plan,
                                                        const std::string& country) {
    std::map<Date, std::int64_t> out;
    for (const auto& row : plan)
        if (row.country == country) out[row.date] += row.organic + row.surge_extra;
    return out;
}

struct CorpusTotals {
    std::int64_t organic = 0, surge_extra = 0, url = 0, overcap = 0, keyword = 0;
    std::int64_t primary_lines = 0, duplicate_lines = 0;
    std::int64_t total_lines() const { return primary_lines + duplicate_lines; }
};

namespace detail {

inline std::string iso_timestamp(const Date& d, std::uint64_t k) {
    char buf[32];
    const unsigned hh = 8u + unsigned((k * 7) % 12);
    const unsigned mm = unsigned((k * 13) % 60);
    const unsigned ss = unsigned((k * 29) % 60);
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02u:%02u:%02uZ", d.year, d.month, d.day, hh,
                  mm, ss);
    return buf;
}

// Stable per-author attributes derived from the author id alone, so repeated
// appearances of an author always carry the same profile.
inline std::uint64_t author_hash(const std::string& id) { return splitmix64(fnv1a_64(id)); }

}  // namespace detail

// Writes the message archive (one JSON object per line, default field names)
// plus a ground-truth manifest. Lines are ordered by (day, sequence); planned
// duplicates are appended afterwards, byte-identical to their originals.
inline CorpusTotals generate_corpus(const ScenarioSpec& spec, const std::string& archive_path,
                                    const std::string& manifest_path) {
    const auto plan = generate_plan(spec);
    CorpusTotals totals;
    std::vector<std::string> lines;
    std::map<std::string, std::uint64_t> pool_cursor;  // (lang,region,class) -> rotation
    std::uint64_t seq = 0;

    std::map<std::string, const RegionShare*> region_by_code;
    for (const auto& r : spec.regions) region_by_code[r.code] = &r;

    const auto emit = [&](const Date& date, const std::string& lang, const std::string& region,
                          char klass, const std::string& text_kind) {
        const std::string pool_key = lang + "|" + region + "|" + klass;
        const std::uint64_t k = pool_cursor[pool_key]++;
        const bool overcap = klass == 'p';
        const int pool = klass == 's' ? spec.surge_pool : (overcap ? 5 : spec.author_pool);
        std::string author;
        author += klass;
        author += lang;
        author += '_';
        author += region.empty() ? "x" : region;
        author += '_';
        author += std::to_string(k % std::uint64_t(pool));

        const std::uint64_t ah = detail::author_hash(author);
        const std::int64_t followers = overcap ? 50'000 + std::int64_t(ah % 200'000)
                                               : 100 + std::int64_t(ah % 1'800);
        const RegionShare* share =
            region.empty() ? nullptr
                           : region_by_code.at(region);

        nlohmann::json j;
        j["id"] = "m" + std::to_string(100'000'000 + seq);
        j["user_id"] = author;
        j["created_at"] = detail::iso_timestamp(date, seq);
        j["lang"] = lang;
        j["followers_count"] = followers;
        j["friends_count"] = std::int64_t(ah >> 32) % 900 + 10;
        j["statuses_count"] = std::int64_t(ah >> 16) % 40'000 + 50;
        j["location"] = share ? share->name : "";
        if (share && share->point && (k % 3 == 0)) {
            j["lat"] = share->point->lat;
            j["lon"] = share->point->lon;
        }

        const std::string term = spec.term_for(lang);
        std::string text;
        if (text_kind == "organic")
            text = term + " this week, note " + std::to_string(seq);
        else if (text_kind == "url")
            text = term + " read more https://news.example/a" + std::to_string(seq);
        else if (text_kind == "overcap")
            text = term + " bulletin " + std::to_string(seq);
        else  // news-topic term planted for the exclusion filter
            text = term + " and " + spec.news_term_for(lang) + " item " + std::to_string(seq);
        j["text"] = text;

        lines.push_back(j.dump());
        ++seq;
        ++totals.primary_lines;
    };

    for (const auto& row : plan) {
        for (std::int64_t i = 0; i < row.organic; ++i) emit(row.date, row.lang, row.region, 'u', "organic");
        for (std::int64_t i = 0; i < row.surge_extra; ++i) emit(row.date, row.lang, row.region, 's', "organic");
        for (std::int64_t i = 0; i < row.url; ++i) emit(row.date, row.lang, row.region, 'u', "url");
        for (std::int64_t i = 0; i < row.overcap; ++i) emit(row.date, row.lang, row.region, 'p', "overcap");
        for (std::int64_t i = 0; i < row.keyword; ++i) emit(row.date, row.lang, row.region, 'u', "keyword");
        totals.organic += row.organic;
        totals.surge_extra += row.surge_extra;
        totals.url += row.url;
        totals.overcap += row.overcap;
        totals.keyword += row.keyword;
    }

    // Planned duplicates: re-emit a deterministic subset of lines verbatim.
    const std::uint64_t threshold =
        std::uint64_t(spec.duplicate_frac * 18446744073709551615.0);
    std::vector<std::size_t> dup_index;
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (prf(spec.seed, kDrawDuplicate, i) < threshold) dup_index.push_back(i);

    std::ofstream out(archive_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + archive_path);
    for (const auto& l : lines) out << l << '\n';
    for (const auto i : dup_index) out << lines[i] << '\n';
    totals.duplicate_lines = std::int64_t(dup_index.size());

    nlohmann::json m;
    m["seed"] = spec.seed;
    m["keyword_set"] = spec.keyword_set_id;
    m["languages"] = spec.languages;
    {
        std::vector<std::string> labels;
        for (const int y : spec.season_years) labels.push_back(season_label(y));
        m["seasons"] = labels;
    }
    if (spec.surge) {
        m["surge"] = {{"region", spec.surge->region},
                      {"first", format_date(spec.surge->first)},
                      {"last", format_date(spec.surge->last)},
                      {"multiplier", spec.surge->multiplier}};
    } else {
        m["surge"] = nullptr;
    }
    m["totals"] = {{"organic", totals.organic},
                   {"surge_extra", totals.surge_extra},
                   {"url", totals.url},
                   {"overcap", totals.overcap},
                   {"keyword", totals.keyword},
                   {"primary_lines", totals.primary_lines},
                   {"duplicate_lines", totals.duplicate_lines},
                   {"total_lines", totals.total_lines()}};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : plan) {
        rows.push_back({{"date", format_date(row.date)},
                        {"season", season_label(row.season_year)},
                        {"lang", row.lang},
                        {"region", row.region},
                        {"country", row.country},
                        {"organic", row.organic},
                        {"surge_extra", row.surge_extra},
                        {"url", row.url},
                        {"overcap", row.overcap},
                        {"keyword", row.keyword}});
    }
    m["rows"] = std::move(rows);
    std::ofstream mp(manifest_path, std::ios::binary);
    if (!mp) throw std::runtime_error("cannot write " + manifest_path);
    mp << m.dump(2) << '\n';
    return totals;
}

// Scenario description from an INI file: a [scenario] section plus one
// [scenario.region.<CODE>] section per region in the mix.
inline ScenarioSpec scenario_from_ini(const IniFile& ini) {
    using detail::to_date;
    using detail::to_double;
    using detail::to_int;
    ScenarioSpec s;
    s.season_years.clear();
    if (const auto v = ini.get("scenario", "seed")) s.seed = std::uint64_t(to_int(*v, "scenario.seed"));
    for (const auto& label : ini.get_all("scenario", "season")) {
        const auto y = parse_season_label(label);
        if (!y) throw std::runtime_error("config: bad season label '" + label + "'");
        s.season_years.push_back(*y);
    }
    if (const auto v = ini.get("scenario", "base_rate")) s.base_rate = to_double(*v, "scenario.base_rate");
    if (const auto v = ini.get("scenario", "amplitude"))
        s.seasonal_amplitude = to_double(*v, "scenario.amplitude");
    if (const auto v = ini.get("scenario", "jitter")) s.jitter = int(to_int(*v, "scenario.jitter"));
    if (const auto v = ini.get("scenario", "url_fraction")) s.frac_url = to_double(*v, "scenario.url_fraction");
    if (const auto v = ini.get("scenario", "overcap_fraction"))
        s.frac_overcap = to_double(*v, "scenario.overcap_fraction");
    if (const auto v = ini.get("scenario", "keyword_fraction"))
        s.frac_keyword = to_double(*v, "scenario.keyword_fraction");
    if (const auto v = ini.get("scenario", "unlocated_fraction"))
        s.frac_unlocated = to_double(*v, "scenario.unlocated_fraction");
    if (const auto v = ini.get("scenario", "duplicate_fraction"))
        s.duplicate_frac = to_double(*v, "scenario.duplicate_fraction");
    {
        const auto langs = ini.get_all("scenario", "language");
        if (!langs.empty()) s.languages = langs;
    }
    if (const auto v = ini.get("scenario", "keyword_set")) s.keyword_set_id = *v;
    if (const auto v = ini.get("scenario", "author_pool")) s.author_pool = int(to_int(*v, "scenario.author_pool"));
    if (const auto v = ini.get("scenario", "surge_pool")) s.surge_pool = int(to_int(*v, "scenario.surge_pool"));
    if (const auto v = ini.get("scenario", "emit_start"))
        s.emit_start = detail::to_month_day(*v, "scenario.emit_start");
    if (const auto v = ini.get("scenario", "emit_end"))
        s.emit_end = detail::to_month_day(*v, "scenario.emit_end");
    if (const auto v = ini.get("scenario", "surge_region")) {
        SurgeSpec surge;
        surge.region = *v;
        const auto first = ini.get("scenario", "surge_first");
        const auto last = ini.get("scenario", "surge_last");
        const auto mult = ini.get("scenario", "surge_multiplier");
        if (!first || !last || !mult)
            throw std::runtime_error("config: surge needs surge_first, surge_last, surge_multiplier");
        surge.first = to_date(*first, "scenario.surge_first");
        surge.last = to_date(*last, "scenario.surge_last");
        surge.multiplier = to_double(*mult, "scenario.surge_multiplier");
        s.surge = surge;
    }
    s.regions.clear();
    for (const auto& section : ini.section_order) {
        if (section.rfind("scenario.region.", 0) != 0) continue;
        RegionShare r;
        r.code = section.substr(16);
        if (const auto v = ini.get(section, "country")) r.country = *v;
        if (const auto v = ini.get(section, "name")) r.name = *v;
        if (const auto v = ini.get(section, "weight")) r.weight = to_double(*v, section + ".weight");
        const auto lon = ini.get(section, "lon");
        const auto lat = ini.get(section, "lat");
        if (lon && lat)
            r.point = GeoPoint{to_double(*lon, section + ".lon"), to_double(*lat, section + ".lat")};
        if (r.name.empty()) r.name = r.code;
        s.regions.push_back(std::move(r));
    }
    s.validate();
    return s;
}

inline ScenarioSpec load_scenario(const std::string& path) {
    const IniFile ini = load_ini(path);
    return scenario_from_ini(ini);
}

}  // namespace epiwarn
