#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiwarn/calendar.hpp"
#include "epiwarn/georesolve.hpp"
#include "epiwarn/stats/regression.hpp"
#include "epiwarn/stats/scan.hpp"

namespace epiwarn {

// All emitters return the complete file content as a string; writing is the
// caller's job. Formatting is fixed (2 decimals for ratios, 5 for test
// statistics and p-values) so identical inputs give identical bytes.

inline std::string fixed_decimals(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

// "statistic (p)" cell, e.g. "0.36066 (0.00064)"
inline std::string stat_cell(double statistic, double p) {
    return fixed_decimals(statistic, 5) + " (" + fixed_decimals(p, 5) + ")";
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// ---- region user table ----

struct RegionReportRow {
    RegionId region;
    std::int64_t users_now = 0;
    std::int64_t users_prior = 0;

    RelativeVariation relative() const { return relative_variation(users_prior, users_now); }
    std::int64_t absolute_variation() const { return users_now - users_prior; }
};

// Within-country order: fresh rows ("new") first by descending current count,
// then finite ratios descending; ties broken by region code. Countries are
// emitted in ascending code order.
inline void sort_region_rows(std::vector<RegionReportRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const RegionReportRow& a, const RegionReportRow& b) {
        if (a.region.country != b.region.country) return a.region.country < b.region.country;
        const RelativeVariation ra = a.relative(), rb = b.relative();
        if (ra.fresh != rb.fresh) return ra.fresh;
        if (ra.fresh && rb.fresh && a.users_now != b.users_now) return a.users_now > b.users_now;
        if (!ra.fresh && !rb.fresh && ra.value != rb.value) return ra.value > rb.value;
        return a.region.code < b.region.code;
    });
}

// Per-country blocks, each closed by a totals row whose ratio comes from the
// summed counts (not from averaging the row ratios).
inline std::string emit_region_table(std::vector<RegionReportRow> rows) {
    sort_region_rows(rows);
    std::ostringstream out;
    out << "region,name,country,users_now,users_prior,relative_variation,absolute_variation\n";
    std::size_t i = 0;
    while (i < rows.size()) {
        const std::string& country = rows[i].region.country;
        std::int64_t sum_now = 0, sum_prior = 0;
        for (; i < rows.size() && rows[i].region.country == country; ++i) {
            const auto& r = rows[i];
            out << r.region.code << ',' << r.region.name << ',' << country << ','
                << r.users_now << ',' << r.users_prior << ','
                << format_variation(r.relative()) << ',' << r.absolute_variation() << '\n';
            sum_now += r.users_now;
            sum_prior += r.users_prior;
        }
        out << "total," << "Total number of users" << ',' << country << ',' << sum_now << ','
            << sum_prior << ',' << format_variation(relative_variation(sum_prior, sum_now))
            << ',' << (sum_now - sum_prior) << '\n';
    }
    return out.str();
}

// ---- anomaly period tables ----

struct AnomalyTableEntry {
    std::string scope;  // country code or "all-countries"
    std::vector<AnomalyPeriod> segments;
};

// One row per segment, chronological within scope. Segments are split into
// an early-warning section and a news-era section: a segment whose first day
// falls after the cutoff cannot be called an early warning.
inline std::string emit_anomaly_table(const std::vector<AnomalyTableEntry>& entries,
                                      int focal_season, double alpha, TestMethod method,
                                      int width_min, int width_max, const Date& news_cutoff) {
    std::ostringstream out;
    out << "# method=" << (method == TestMethod::ks ? "ks" : "ad") << '\n';
    out << "# width_min=" << width_min << '\n';
    out << "# width_max=" << width_max << '\n';
    out << "# alpha=" << fixed_decimals(alpha, 2) << '\n';
    out << "# season=" << season_label(focal_season) << '\n';
    out << "# news_cutoff=" << format_date(news_cutoff) << '\n';
    out << "section,scope,first_day,last_day,days,min_p\n";
    const auto rows_for = [&](bool news_era) {
        for (const auto& e : entries) {
            for (const auto& seg : e.segments) {
                const Date first = season_axis_date(focal_season, seg.first_axis_index);
                const Date last = season_axis_date(focal_season, seg.last_axis_index);
                if ((news_cutoff < first) != news_era) continue;
                out << (news_era ? "news-era" : "early-warning") << ',' << e.scope << ','
                    << format_date(first) << ',' << format_date(last) << ','
                    << (seg.last_axis_index - seg.first_axis_index + 1) << ','
                    << fixed_decimals(seg.min_p, 5) << '\n';
            }
        }
    };
    rows_for(false);
    rows_for(true);
    return out.str();
}

// ---- p-value curve / cumulative curve files ----

inline std::string emit_pvalue_curve_csv(const PValueCurve& curve, int focal_season,
                                         const std::string& scope,
                                         const std::string& keyword_set) {
    std::ostringstream out;
    out << "# scope=" << scope << '\n';
    out << "# keyword_set=" << keyword_set << '\n';
    out << "# season=" << season_label(focal_season) << '\n';
    out << "# method=" << (curve.method == TestMethod::ks ? "ks" : "ad") << '\n';
    out << "# width_min=" << curve.width_min << '\n';
    out << "# width_max=" << curve.width_max << '\n';
    out << "axis_index,date,avg_p\n";
    for (const auto& pt : curve.points) {
        out << pt.axis_index << ',' << format_date(season_axis_date(focal_season, pt.axis_index))
            << ',';
        if (pt.p) out << fixed_decimals(*pt.p, 5);
        out << '\n';
    }
    return out.str();
}

// One column per season; rows are 1-based day offsets within the window.
inline std::string emit_cumulative_csv(const std::string& scope, const std::string& keyword_set,
                                       const MonthDay& anchor_start,
                                       const std::vector<std::pair<int, std::vector<double>>>&
                                           season_curves) {
    if (season_curves.empty()) throw std::invalid_argument("no season curves");
    const std::size_t len = season_curves.front().second.size();
    for (const auto& [year, curve] : season_curves)
        if (curve.size() != len) throw std::invalid_argument("season curves of unequal length");
    std::ostringstream out;
    out << "# scope=" << scope << '\n';
    out << "# keyword_set=" << keyword_set << '\n';
    out << "# anchor_start=" << (anchor_start.month < 10 ? "0" : "") << anchor_start.month << '-'
        << (anchor_start.day < 10 ? "0" : "") << anchor_start.day << '\n';
    out << "day";
    for (const auto& [year, curve] : season_curves) out << ',' << season_label(year);
    out << '\n';
    for (std::size_t i = 0; i < len; ++i) {
        out << (i + 1);
        for (const auto& [year, curve] : season_curves) out << ',' << fixed_decimals(curve[i], 5);
        out << '\n';
    }
    return out.str();
}

// ---- focal-vs-baseline window test summary ----

struct SeasonStatRow {
    std::string scope;
    int baseline_season = 0;
    TestMethod method = TestMethod::ks;
    double statistic = 0.0;
    double p_value = 0.0;
};

inline std::string emit_season_stats(const std::vector<SeasonStatRow>& rows, int focal_season) {
    std::ostringstream out;
    out << "# focal=" << season_label(focal_season) << '\n';
    out << "scope,baseline,method,statistic,p,display\n";
    for (const auto& r : rows) {
        out << r.scope << ',' << season_label(r.baseline_season) << ','
            << (r.method == TestMethod::ks ? "ks" : "ad") << ','
            << fixed_decimals(r.statistic, 5) << ',' << fixed_decimals(r.p_value, 5) << ','
            << '"' << stat_cell(r.statistic, r.p_value) << '"' << '\n';
    }
    return out.str();
}

// ---- choropleth ----

// One feature per gazetteer region, value 0 when absent from the map. A
// value keyed to a region without a polygon yields a feature with null
// geometry and null value plus a warning; the value itself stays in the
// tabular outputs.
inline std::string emit_choropleth(const std::map<std::string, double>& values,
                                   const Gazetteer& g,
                                   std::vector<std::string>* warnings = nullptr) {
    if (g.polygons.empty()) throw std::runtime_error("choropleth requires boundary file");
    nlohmann::json features = nlohmann::json::array();
    const auto region_feature = [&](const std::string& code, const RegionId* region) {
        nlohmann::json f;
        f["type"] = "Feature";
        f["properties"]["code"] = code;
        if (region) {
            f["properties"]["name"] = region->name;
            f["properties"]["country"] = region->country;
        }
        const auto pit = g.polygons.find(code);
        const auto vit = values.find(code);
        if (pit != g.polygons.end()) {
            nlohmann::json rings = nlohmann::json::array();
            for (const auto& ring : pit->second.rings) {
                nlohmann::json coords = nlohmann::json::array();
                for (const auto& p : ring.pts) coords.push_back({p.lon, p.lat});
                if (!ring.pts.empty())
                    coords.push_back({ring.pts.front().lon, ring.pts.front().lat});
                rings.push_back(std::move(coords));
            }
            f["geometry"] = {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
            f["properties"]["value"] = vit == values.end() ? 0.0 : vit->second;
        } else {
            f["geometry"] = nullptr;
            f["properties"]["value"] = nullptr;
            if (warnings)
                warnings->push_back("region " + code + " has no polygon; value omitted from map");
        }
        return f;
    };
    for (const auto& region : g.regions) features.push_back(region_feature(region.code, &region));
    for (const auto& [code, v] : values)
        if (!g.find_code(code)) features.push_back(region_feature(code, nullptr));
    nlohmann::json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = std::move(features);
    return fc.dump(2) + "\n";
}

// ---- regression summary ----

inline std::string emit_regression_summary(const std::optional<RegressionFit>& fit,
                                           const std::string& note) {
    std::ostringstream out;
    out << "slope,intercept,r2,n\n";
    if (fit) {
        out << fixed_decimals(fit->slope, 5) << ',' << fixed_decimals(fit->intercept, 5) << ','
            << fixed_decimals(fit->r2, 5) << ',' << fit->n << '\n';
    } else {
        out << "# " << note << '\n';
    }
    return out.str();
}

}  // namespace epiwarn
