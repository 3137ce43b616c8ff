#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiwarn/config.hpp"
#include "epiwarn/filters.hpp"
#include "epiwarn/georesolve.hpp"
#include "epiwarn/ingest.hpp"
#include "epiwarn/report.hpp"
#include "epiwarn/stats/ad.hpp"
#include "epiwarn/stats/ks.hpp"
#include "epiwarn/stats/scan.hpp"
#include "epiwarn/timeseries.hpp"

namespace epiwarn {

struct RunOverrides {
    std::optional<TestMethod> method;
    std::optional<double> alpha;  // replaces the configured alpha list
};

struct RunResult {
    int exit_code = 0;
    std::string failed_stage;  // empty on success
    std::string message;
    std::filesystem::path out_dir;
};

namespace detail {

// Rows of <set>/window_users.csv: distinct authors per region inside one
// season's anchor window. The region table, choropleth, and regression all
// read these back rather than recomputing from raw messages.
struct WindowUsersKey {
    std::string keyword_set;
    int season_year;
    std::string region;
    friend bool operator<(const WindowUsersKey& a, const WindowUsersKey& b) {
        if (a.keyword_set != b.keyword_set) return a.keyword_set < b.keyword_set;
        if (a.season_year != b.season_year) return a.season_year < b.season_year;
        return a.region < b.region;
    }
};
using WindowUsers = std::map<WindowUsersKey, std::int64_t>;

inline std::string window_users_csv(const WindowUsers& rows) {
    std::ostringstream out;
    out << "keyword_set,season,region,users\n";
    for (const auto& [k, v] : rows)
        out << k.keyword_set << ',' << season_label(k.season_year) << ',' << k.region << ',' << v
            << '\n';
    return out.str();
}

inline WindowUsers read_window_users_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    WindowUsers rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 4) throw std::runtime_error("bad window_users row: " + line);
        const auto season = parse_season_label(parts[1]);
        if (!season) throw std::runtime_error("bad season label: " + parts[1]);
        rows[WindowUsersKey{parts[0], *season, parts[2]}] = to_int(parts[3], "window users");
    }
    return rows;
}

inline std::vector<std::filesystem::path> sorted_tree(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(std::filesystem::relative(entry.path(), root));
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.generic_string() < b.generic_string(); });
    return files;
}

}  // namespace detail

// Scope list scanned per keyword set: the cross-language pool plus every
// study country.
inline std::vector<std::string> detection_scopes() {
    std::vector<std::string> scopes{"all-countries"};
    for (const auto c : kStudyCountries) scopes.emplace_back(c);
    return scopes;
}

// Full pipeline. Every stage writes beneath <out>/work; on success the
// stage directories move up into <out>, on failure the whole tree moves to
// <out>/failed with an error note, and the process exits nonzero.
inline RunResult run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& archives,
                              const std::filesystem::path& out_dir, const RunOverrides& ov = {}) {
    namespace fs = std::filesystem;
    RunResult result;
    result.out_dir = out_dir;
    const fs::path work = out_dir / "work";
    std::string current_stage = "setup";
    nlohmann::json manifest;

    try {
        if (fs::exists(work)) fs::remove_all(work);
        fs::create_directories(work);

        ScanParams scan = cfg.scan;
        if (ov.method) scan.method = *ov.method;
        std::vector<double> alphas = cfg.alphas;
        if (ov.alpha) alphas = {*ov.alpha};
        for (const double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("alpha outside (0,1)");

        // ---- ingest ----
        current_stage = "ingest";
        if (archives.empty()) throw std::runtime_error("no archive files given");
        ArchiveReader reader(cfg.ingest);
        for (const auto& path : archives) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw std::runtime_error("cannot read archive " + path);
            reader.consume(in);
        }
        ParsedArchive archive = reader.finish();
        fs::create_directories(work / "ingest");
        write_messages_jsonl((work / "ingest" / "messages.jsonl").string(), archive.messages);
        write_users_jsonl((work / "ingest" / "users.jsonl").string(), archive.users);
        write_archive_stats((work / "ingest" / "archive_stats.json").string(), archive.stats);
        manifest["stages"]["ingest"] = {{"total_records", archive.stats.total_records},
                                        {"unique_messages", archive.stats.unique_messages},
                                        {"unique_users", archive.stats.unique_users},
                                        {"duplicates", archive.stats.duplicates},
                                        {"rejected_malformed", archive.stats.rejected_malformed}};

        // ---- filter ----
        current_stage = "filter";
        const auto user_map = build_user_map(archive.users);
        auto [survivors, fstats] = apply_filters(archive.messages, user_map, cfg.filters);
        std::vector<UserProfile> survivor_users;
        {
            std::set<std::string> authors;
            for (const auto& m : survivors) authors.insert(m.author_id);
            for (const auto& u : archive.users)
                if (authors.count(u.author_id)) survivor_users.push_back(u);
        }
        fs::create_directories(work / "filtered");
        write_messages_jsonl((work / "filtered" / "messages.jsonl").string(), survivors);
        write_users_jsonl((work / "filtered" / "users.jsonl").string(), survivor_users);
        write_filter_stats((work / "filtered" / "filter_stats.json").string(), fstats);
        manifest["stages"]["filter"] = {{"dropped_url", fstats.dropped_url},
                                        {"dropped_followers", fstats.dropped_followers},
                                        {"dropped_keyword", fstats.dropped_keyword},
                                        {"survivors_messages", fstats.survivors_messages},
                                        {"survivors_users", fstats.survivors_users}};

        // ---- georesolve ----
        current_stage = "georesolve";
        if (cfg.gazetteer_path.empty()) throw std::runtime_error("no gazetteer configured");
        Gazetteer gaz = load_gazetteer_tsv(cfg.gazetteer_path);
        if (!cfg.boundaries_path.empty()) load_boundaries_geojson(cfg.boundaries_path, gaz);
        gaz.validate();
        const ResolutionSet resolutions = resolve_users(survivor_users, gaz);
        fs::create_directories(work / "resolved");
        write_resolutions_jsonl((work / "resolved" / "resolutions.jsonl").string(), resolutions);
        {
            nlohmann::json rj = {{"resolved", resolutions.resolved},
                                 {"unresolved", resolutions.unresolved},
                                 {"conflict", resolutions.conflict},
                                 {"resolution_rate", resolutions.resolution_rate()}};
            write_text_file(work / "resolved" / "resolution_stats.json", rj.dump(2) + "\n");
            manifest["stages"]["georesolve"] = rj;
        }

        // ---- aggregate ----
        current_stage = "aggregate";
        const fs::path series_root = work / "series";
        const DateRange range = cfg.ingest.study_range;
        std::int64_t series_files = 0;
        for (const auto& set : cfg.ingest.keyword_sets) {
            // country-level scopes always exist; region scopes only when hit
            std::vector<std::string> scopes = detection_scopes();
            for (const auto c : kStudyCountries) scopes.push_back("unresolved:" + std::string(c));
            std::vector<std::string> region_scopes;
            for (const auto& r : gaz.regions) region_scopes.push_back(r.code);
            for (const CountMode mode : {CountMode::messages, CountMode::unique_users}) {
                for (const auto& scope : scopes) {
                    const DailySeries s = aggregate_daily(survivors, resolutions, gaz,
                                                          SeriesKey{scope, set.id, mode}, range);
                    write_series_csv(series_root, s);
                    ++series_files;
                }
                for (const auto& scope : region_scopes) {
                    const DailySeries s = aggregate_daily(survivors, resolutions, gaz,
                                                          SeriesKey{scope, set.id, mode}, range);
                    std::int64_t total = 0;
                    for (const auto v : s.values) total += v;
                    if (total == 0) continue;  // quiet regions stay implicit in series form
                    write_series_csv(series_root, s);
                    ++series_files;
                }
            }
        }
        // distinct authors per region within each season's anchor window
        std::vector<int> window_seasons = cfg.baseline_seasons;
        window_seasons.push_back(cfg.focal_season);
        window_seasons.push_back(cfg.focal_season - 1);
        std::sort(window_seasons.begin(), window_seasons.end());
        window_seasons.erase(std::unique(window_seasons.begin(), window_seasons.end()),
                             window_seasons.end());
        const int anchor_idx = season_axis_index(cfg.anchor_start);
        const int width = cfg.anchor_width_days();
        for (const auto& set : cfg.ingest.keyword_sets) {
            detail::WindowUsers window_users;
            for (const int season : window_seasons) {
                const Date wfirst = season_axis_date(season, anchor_idx);
                const Date wlast = add_days(wfirst, width - 1);
                std::map<std::string, std::set<std::string>> authors_by_region;
                for (const auto& m : survivors) {
                    if (m.matched_keyword_set != set.id) continue;
                    if (m.posted_date < wfirst || wlast < m.posted_date) continue;
                    const std::string* code = resolutions.region_of(m.author_id);
                    if (!code) continue;
                    authors_by_region[*code].insert(m.author_id);
                }
                for (const auto& [code, authors] : authors_by_region)
                    window_users[detail::WindowUsersKey{set.id, season, code}] =
                        std::int64_t(authors.size());
            }
            write_text_file(series_root / set.id / "window_users.csv",
                            detail::window_users_csv(window_users));
        }
        manifest["stages"]["aggregate"] = {{"series_files", series_files},
                                           {"study_first", format_date(range.first)},
                                           {"study_last", format_date(range.last)}};

        // ---- detect ----
        current_stage = "detect";
        const int scan_start = anchor_idx;
        const int scan_end = anchor_idx + width - 1;
        std::int64_t curves = 0;
        for (const auto& set : cfg.ingest.keyword_sets) {
            std::map<double, std::vector<AnomalyTableEntry>> anomalies_by_alpha;
            std::vector<SeasonStatRow> season_rows;
            for (const auto& scope : detection_scopes()) {
                const DailySeries s = read_series_csv(series_path(
                    series_root, SeriesKey{scope, set.id, CountMode::messages}));
                const auto focal_counts = season_axis_counts(s, cfg.focal_season);
                std::vector<std::vector<std::int64_t>> baselines;
                for (const int season : cfg.baseline_seasons)
                    baselines.push_back(season_axis_counts(s, season));
                const PValueCurve curve =
                    multi_baseline_scan(focal_counts, baselines, scan_start, scan_end, scan);
                write_text_file(work / "detect" / set.id / (scope + "_pvalues.csv"),
                                emit_pvalue_curve_csv(curve, cfg.focal_season, scope, set.id));
                ++curves;
                for (const double alpha : alphas)
                    anomalies_by_alpha[alpha].push_back(
                        AnomalyTableEntry{scope, extract_anomaly_periods(curve, alpha)});

                // focal vs each baseline over the anchor window itself
                const auto window_of = [&](int season) {
                    return season_slice(s, SeasonWindow{cfg.anchor_start, width, season});
                };
                const SeasonSlice focal_slice = window_of(cfg.focal_season);
                const auto mass = [](const SeasonSlice& sl) {
                    std::int64_t t = 0;
                    for (const auto v : sl.values) t += v;
                    return t;
                };
                if (mass(focal_slice) > 0) {
                    for (const int season : cfg.baseline_seasons) {
                        const SeasonSlice base_slice = window_of(season);
                        if (mass(base_slice) == 0) continue;
                        const WeightedSample a = window_sample(focal_slice.values, scan.sample_mode);
                        const WeightedSample b = window_sample(base_slice.values, scan.sample_mode);
                        const TestResult ks = ks_two_sample(a, b, scan.exact_crossover);
                        season_rows.push_back(SeasonStatRow{scope, season, TestMethod::ks,
                                                            ks.statistic, ks.p_value});
                        const TestResult ad = ad_two_sample(a, b);
                        season_rows.push_back(SeasonStatRow{scope, season, TestMethod::ad,
                                                            ad.statistic, ad.p_value});
                    }
                }
            }
            for (const double alpha : alphas) {
                char alpha_buf[16];
                std::snprintf(alpha_buf, sizeof alpha_buf, "%.2f", alpha);
                write_text_file(
                    work / "detect" / set.id / ("anomalies_alpha" + std::string(alpha_buf) + ".csv"),
                    emit_anomaly_table(anomalies_by_alpha[alpha], cfg.focal_season, alpha,
                                       scan.method, scan.width_min, scan.width_max,
                                       cfg.news_cutoff));
            }
            write_text_file(work / "detect" / set.id / "season_stats.csv",
                            emit_season_stats(season_rows, cfg.focal_season));
        }
        manifest["stages"]["detect"] = {{"curves", curves},
                                        {"method", scan.method == TestMethod::ks ? "ks" : "ad"},
                                        {"width_min", scan.width_min},
                                        {"width_max", scan.width_max}};

        // ---- report ----
        current_stage = "report";
        for (const auto& set : cfg.ingest.keyword_sets) {
            const auto window_users =
                detail::read_window_users_csv(series_root / set.id / "window_users.csv");
            const auto users_in = [&](int season, const std::string& region) {
                const auto it =
                    window_users.find(detail::WindowUsersKey{set.id, season, region});
                return it == window_users.end() ? std::int64_t(0) : it->second;
            };
            std::vector<RegionReportRow> rows;
            std::map<std::string, double> focal_values;
            for (const auto& region : gaz.regions) {
                RegionReportRow row;
                row.region = region;
                row.users_now = users_in(cfg.focal_season, region.code);
                row.users_prior = users_in(cfg.focal_season - 1, region.code);
                focal_values[region.code] = double(row.users_now);
                if (row.users_now != 0 || row.users_prior != 0) rows.push_back(row);
            }
            write_text_file(work / "report" / set.id / "region_users.csv",
                            emit_region_table(rows));

            std::vector<std::string> warnings;
            write_text_file(work / "report" / set.id / "choropleth.geojson",
                            emit_choropleth(focal_values, gaz, &warnings));
            if (!warnings.empty()) {
                std::string note;
                for (const auto& w : warnings) note += w + "\n";
                write_text_file(work / "report" / set.id / "choropleth_warnings.txt", note);
            }

            std::vector<double> xs, ys;
            for (const auto& region : gaz.regions) {
                const auto pit = gaz.population.find(region.code);
                const std::int64_t users = users_in(cfg.focal_season, region.code);
                if (pit == gaz.population.end() || pit->second <= 0 || users <= 0) continue;
                xs.push_back(double(pit->second));
                ys.push_back(double(users));
            }
            std::optional<RegressionFit> fit;
            std::string note = "insufficient points for regression";
            if (xs.size() >= 3) {
                try {
                    fit = loglog_fit(xs, ys);
                } catch (const std::exception& e) {
                    note = e.what();
                }
            }
            write_text_file(work / "report" / set.id / "regression.csv",
                            emit_regression_summary(fit, note));

            // cumulative anchor-window curves per scope, one column per season
            std::vector<int> seasons = cfg.baseline_seasons;
            seasons.push_back(cfg.focal_season);
            std::sort(seasons.begin(), seasons.end());
            seasons.erase(std::unique(seasons.begin(), seasons.end()), seasons.end());
            for (const auto& scope : detection_scopes()) {
                const DailySeries s = read_series_csv(series_path(
                    series_root, SeriesKey{scope, set.id, CountMode::messages}));
                std::vector<std::pair<int, std::vector<double>>> curves_by_season;
                for (const int season : seasons) {
                    const SeasonSlice slice =
                        season_slice(s, SeasonWindow{cfg.anchor_start, width, season});
                    std::int64_t total = 0;
                    for (const auto v : slice.values) total += v;
                    if (total == 0) continue;
                    curves_by_season.emplace_back(season, cumulative_rescaled(slice.values));
                }
                if (curves_by_season.empty()) continue;
                write_text_file(work / "report" / set.id / "cumulative" / (scope + ".csv"),
                                emit_cumulative_csv(scope, set.id, cfg.anchor_start,
                                                    curves_by_season));
            }
        }

        // ---- manifest + finalize ----
        current_stage = "finalize";
        manifest["config_hash"] = hex64(cfg.config_hash);
        manifest["focal_season"] = season_label(cfg.focal_season);
        {
            std::vector<std::string> baseline_labels;
            for (const int y : cfg.baseline_seasons) baseline_labels.push_back(season_label(y));
            manifest["baseline_seasons"] = baseline_labels;
        }
        {
            nlohmann::json outputs = nlohmann::json::array();
            for (const auto& rel : detail::sorted_tree(work)) outputs.push_back(rel.generic_string());
            manifest["outputs"] = std::move(outputs);
        }
        write_text_file(work / "manifest.json", manifest.dump(2) + "\n");

        for (const auto& entry : fs::directory_iterator(work)) {
            const fs::path target = out_dir / entry.path().filename();
            if (fs::exists(target)) fs::remove_all(target);
            fs::rename(entry.path(), target);
        }
        fs::remove_all(work);
        return result;
    } catch (const std::exception& e) {
        // move the partial tree under a failure marker and report the stage
        result.exit_code = 1;
        result.failed_stage = current_stage;
        result.message = e.what();
        try {
            std::ofstream note(work / "error.txt", std::ios::binary);
            note << "stage: " << current_stage << "\ncause: " << e.what() << '\n';
            note.close();
            const fs::path failed = out_dir / "failed";
            if (fs::exists(failed)) fs::remove_all(failed);
            fs::rename(work, failed);
        } catch (...) {
            // the error report must not mask the original failure
        }
        return result;
    }
}

}  // namespace epiwarn
