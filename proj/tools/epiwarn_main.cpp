// Command-line driver: each verb runs one pipeline stage against persisted
// inputs; `run` chains them all with failure markers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "epiwarn/config.hpp"
#include "epiwarn/filters.hpp"
#include "epiwarn/georesolve.hpp"
#include "epiwarn/ingest.hpp"
#include "epiwarn/pipeline.hpp"
#include "epiwarn/report.hpp"
#include "epiwarn/synthgen.hpp"
#include "epiwarn/timeseries.hpp"

namespace fs = std::filesystem;
using namespace epiwarn;

namespace {

PipelineConfig load_config_or_default(const std::string& path) {
    if (path.empty()) {
        PipelineConfig c;
        c.ingest.keyword_sets = default_keyword_sets();
        c.filters.excluded_keywords = default_exclusion_lists();
        c.baseline_seasons = {2014, 2015, 2016, 2017, 2018};
        return c;
    }
    return load_pipeline_config(path);
}

std::optional<TestMethod> parse_method(const std::string& m) {
    if (m.empty()) return std::nullopt;
    if (m == "ks") return TestMethod::ks;
    if (m == "ad") return TestMethod::ad;
    throw std::runtime_error("--method must be ks or ad");
}

Gazetteer load_gazetteer(const PipelineConfig& cfg) {
    if (cfg.gazetteer_path.empty()) throw std::runtime_error("no gazetteer configured");
    Gazetteer g = load_gazetteer_tsv(cfg.gazetteer_path);
    if (!cfg.boundaries_path.empty()) load_boundaries_geojson(cfg.boundaries_path, g);
    g.validate();
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seasonal excess-posting detector for keyword message archives"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string method_arg;
    double alpha_arg = 0.0;
    bool alpha_set = false;

    // ingest
    auto* cmd_ingest = app.add_subcommand("ingest", "parse archives into canonical records");
    std::vector<std::string> ingest_archives;
    std::string schema_path;
    cmd_ingest->add_option("archives", ingest_archives, "archive JSONL files")->required();
    cmd_ingest->add_option("--config", config_path, "pipeline config file");
    cmd_ingest->add_option("--out", out_dir, "output directory");
    cmd_ingest->add_option("--schema", schema_path, "field-name mapping config");

    // filter
    auto* cmd_filter = app.add_subcommand("filter", "apply the message filter rules");
    std::string in_messages, in_users;
    cmd_filter->add_option("--messages", in_messages, "messages.jsonl from ingest")->required();
    cmd_filter->add_option("--users", in_users, "users.jsonl from ingest")->required();
    cmd_filter->add_option("--config", config_path, "pipeline config file");
    cmd_filter->add_option("--out", out_dir, "output directory");

    // georesolve
    auto* cmd_geo = app.add_subcommand("georesolve", "assign authors to regions");
    std::string geo_users;
    cmd_geo->add_option("--users", geo_users, "users.jsonl to resolve")->required();
    cmd_geo->add_option("--config", config_path, "pipeline config file")->required();
    cmd_geo->add_option("--out", out_dir, "output directory");

    // aggregate
    auto* cmd_agg = app.add_subcommand("aggregate", "build daily count series");
    std::string agg_messages, agg_resolutions;
    cmd_agg->add_option("--messages", agg_messages, "filtered messages.jsonl")->required();
    cmd_agg->add_option("--resolutions", agg_resolutions, "resolutions.jsonl")->required();
    cmd_agg->add_option("--config", config_path, "pipeline config file")->required();
    cmd_agg->add_option("--out", out_dir, "series output root");

    // detect
    auto* cmd_detect = app.add_subcommand("detect", "moving-window seasonal excess scan");
    std::string detect_series;
    cmd_detect->add_option("--series", detect_series, "series root from aggregate")->required();
    cmd_detect->add_option("--config", config_path, "pipeline config file")->required();
    cmd_detect->add_option("--out", out_dir, "output directory");
    cmd_detect->add_option("--method", method_arg, "test method: ks or ad");
    cmd_detect->add_option("--alpha", alpha_arg, "significance level")
        ->check(CLI::Range(1e-9, 1.0))
        ->each([&](const std::string&) { alpha_set = true; });

    // report
    auto* cmd_report = app.add_subcommand("report", "tables, curves, choropleth, regression");
    std::string report_series;
    cmd_report->add_option("--series", report_series, "series root from aggregate")->required();
    cmd_report->add_option("--config", config_path, "pipeline config file")->required();
    cmd_report->add_option("--out", out_dir, "output directory");

    // synth
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic archive + manifest");
    std::string scenario_path;
    std::uint64_t seed_arg = 0;
    bool seed_set = false;
    cmd_synth->add_option("--config", scenario_path, "scenario config file")->required();
    cmd_synth->add_option("--out", out_dir, "output directory");
    cmd_synth->add_option("--seed", seed_arg, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });

    // run
    auto* cmd_run = app.add_subcommand("run", "full pipeline: ingest through report");
    std::vector<std::string> run_archives;
    cmd_run->add_option("archives", run_archives, "archive JSONL files")->required();
    cmd_run->add_option("--config", config_path, "pipeline config file")->required();
    cmd_run->add_option("--out", out_dir, "output directory");
    cmd_run->add_option("--method", method_arg, "test method: ks or ad");
    cmd_run->add_option("--alpha", alpha_arg, "significance level")
        ->check(CLI::Range(1e-9, 1.0))
        ->each([&](const std::string&) { alpha_set = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cmd_ingest)) {
            PipelineConfig cfg = load_config_or_default(config_path);
            if (!schema_path.empty()) {
                const IniFile ini = load_ini(schema_path);
                PipelineConfig schema_only = pipeline_config_from_ini(ini);
                cfg.ingest.schema = schema_only.ingest.schema;
            }
            ArchiveReader reader(cfg.ingest);
            for (const auto& path : ingest_archives) {
                std::ifstream in(path, std::ios::binary);
                if (!in) throw std::runtime_error("cannot read archive " + path);
                reader.consume(in);
            }
            const ParsedArchive archive = reader.finish();
            fs::create_directories(out_dir);
            write_messages_jsonl((fs::path(out_dir) / "messages.jsonl").string(), archive.messages);
            write_users_jsonl((fs::path(out_dir) / "users.jsonl").string(), archive.users);
            write_archive_stats((fs::path(out_dir) / "archive_stats.json").string(), archive.stats);
            std::printf("ingested %lld records: %lld messages, %lld users, %lld duplicates\n",
                        (long long)archive.stats.total_records,
                        (long long)archive.stats.unique_messages,
                        (long long)archive.stats.unique_users,
                        (long long)archive.stats.duplicates);
        } else if (app.got_subcommand(cmd_filter)) {
            const PipelineConfig cfg = load_config_or_default(config_path);
            const auto messages = read_messages_jsonl(in_messages);
            const auto users = read_users_jsonl(in_users);
            const auto [survivors, stats] = apply_filters(messages, build_user_map(users), cfg.filters);
            std::vector<UserProfile> survivor_users;
            {
                std::set<std::string> authors;
                for (const auto& m : survivors) authors.insert(m.author_id);
                for (const auto& u : users)
                    if (authors.count(u.author_id)) survivor_users.push_back(u);
            }
            fs::create_directories(out_dir);
            write_messages_jsonl((fs::path(out_dir) / "messages.jsonl").string(), survivors);
            write_users_jsonl((fs::path(out_dir) / "users.jsonl").string(), survivor_users);
            write_filter_stats((fs::path(out_dir) / "filter_stats.json").string(), stats);
            std::printf("kept %lld of %lld messages (url %lld, followers %lld, keyword %lld)\n",
                        (long long)stats.survivors_messages, (long long)stats.input_messages(),
                        (long long)stats.dropped_url, (long long)stats.dropped_followers,
                        (long long)stats.dropped_keyword);
        } else if (app.got_subcommand(cmd_geo)) {
            const PipelineConfig cfg = load_config_or_default(config_path);
            const Gazetteer g = load_gazetteer(cfg);
            const auto users = read_users_jsonl(geo_users);
            const ResolutionSet set = resolve_users(users, g);
            fs::create_directories(out_dir);
            write_resolutions_jsonl((fs::path(out_dir) / "resolutions.jsonl").string(), set);
            nlohmann::json rj = {{"resolved", set.resolved},
                                 {"unresolved", set.unresolved},
                                 {"conflict", set.conflict},
                                 {"resolution_rate", set.resolution_rate()}};
            write_text_file(fs::path(out_dir) / "resolution_stats.json", rj.dump(2) + "\n");
            std::printf("resolved %lld, unresolved %lld, conflict %lld (rate %.4f)\n",
                        (long long)set.resolved, (long long)set.unresolved,
                        (long long)set.conflict, set.resolution_rate());
        } else if (app.got_subcommand(cmd_agg)) {
            const PipelineConfig cfg = load_config_or_default(config_path);
            const Gazetteer g = load_gazetteer(cfg);
            const auto messages = read_messages_jsonl(agg_messages);
            const ResolutionSet resolutions = read_resolutions_jsonl(agg_resolutions);
            const fs::path root(out_dir);
            std::int64_t files = 0;
            for (const auto& set : cfg.ingest.keyword_sets) {
                std::vector<std::string> scopes = detection_scopes();
                for (const auto c : kStudyCountries) scopes.push_back("unresolved:" + std::string(c));
                for (const auto& r : g.regions) scopes.push_back(r.code);
                for (const CountMode mode : {CountMode::messages, CountMode::unique_users})
                    for (const auto& scope : scopes) {
                        const DailySeries s =
                            aggregate_daily(messages, resolutions, g,
                                            SeriesKey{scope, set.id, mode}, cfg.ingest.study_range);
                        std::int64_t total = 0;
                        for (const auto v : s.values) total += v;
                        const bool always = scope == "all-countries" ||
                                            scope.rfind("unresolved:", 0) == 0 ||
                                            !g.find_code(scope);
                        if (total == 0 && !always && g.find_code(scope)) continue;
                        write_series_csv(root, s);
                        ++files;
                    }
            }
            std::printf("wrote %lld series under %s\n", (long long)files, out_dir.c_str());
        } else if (app.got_subcommand(cmd_detect)) {
            const PipelineConfig cfg = load_config_or_default(config_path);
            ScanParams scan = cfg.scan;
            if (const auto m = parse_method(method_arg)) scan.method = *m;
            std::vector<double> alphas = alpha_set ? std::vector<double>{alpha_arg} : cfg.alphas;
            const int start = season_axis_index(cfg.anchor_start);
            const int end = start + cfg.anchor_width_days() - 1;
            fs::create_directories(out_dir);
            for (const auto& set : cfg.ingest.keyword_sets) {
                std::map<double, std::vector<AnomalyTableEntry>> tables;
                for (const auto& scope : detection_scopes()) {
                    const DailySeries s = read_series_csv(series_path(
                        detect_series, SeriesKey{scope, set.id, CountMode::messages}));
                    const auto focal = season_axis_counts(s, cfg.focal_season);
                    std::vector<std::vector<std::int64_t>> baselines;
                    for (const int season : cfg.baseline_seasons)
                        baselines.push_back(season_axis_counts(s, season));
                    const PValueCurve curve = multi_baseline_scan(focal, baselines, start, end, scan);
                    write_text_file(fs::path(out_dir) / set.id / (scope + "_pvalues.csv"),
                                    emit_pvalue_curve_csv(curve, cfg.focal_season, scope, set.id));
                    for (const double alpha : alphas)
                        tables[alpha].push_back(
                            AnomalyTableEntry{scope, extract_anomaly_periods(curve, alpha)});
                }
                for (const double alpha : alphas) {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "%.2f", alpha);
                    write_text_file(
                        fs::path(out_dir) / set.id / ("anomalies_alpha" + std::string(buf) + ".csv"),
                        emit_anomaly_table(tables[alpha], cfg.focal_season, alpha, scan.method,
                                           scan.width_min, scan.width_max, cfg.news_cutoff));
                }
            }
            std::printf("detection written under %s\n", out_dir.c_str());
        } else if (app.got_subcommand(cmd_report)) {
            const PipelineConfig cfg = load_config_or_default(config_path);
            const Gazetteer g = load_gazetteer(cfg);
            const fs::path series_root(report_series);
            const int width = cfg.anchor_width_days();
            for (const auto& set : cfg.ingest.keyword_sets) {
                const auto window_users = epiwarn::detail::read_window_users_csv(
                    series_root / set.id / "window_users.csv");
                const auto users_in = [&](int season, const std::string& region) {
                    const auto it = window_users.find(
                        epiwarn::detail::WindowUsersKey{set.id, season, region});
                    return it == window_users.end() ? std::int64_t(0) : it->second;
                };
                std::vector<RegionReportRow> rows;
                std::map<std::string, double> focal_values;
                for (const auto& region : g.regions) {
                    RegionReportRow row;
                    row.region = region;
                    row.users_now = users_in(cfg.focal_season, region.code);
                    row.users_prior = users_in(cfg.focal_season - 1, region.code);
                    focal_values[region.code] = double(row.users_now);
                    if (row.users_now != 0 || row.users_prior != 0) rows.push_back(row);
                }
                write_text_file(fs::path(out_dir) / set.id / "region_users.csv",
                                emit_region_table(rows));
                std::vector<std::string> warnings;
                write_text_file(fs::path(out_dir) / set.id / "choropleth.geojson",
                                emit_choropleth(focal_values, g, &warnings));
                for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
                std::vector<double> xs, ys;
                for (const auto& region : g.regions) {
                    const auto pit = g.population.find(region.code);
                    const std::int64_t users = users_in(cfg.focal_season, region.code);
                    if (pit == g.population.end() || pit->second <= 0 || users <= 0) continue;
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
                write_text_file(fs::path(out_dir) / set.id / "regression.csv",
                                emit_regression_summary(fit, note));
                std::vector<int> seasons = cfg.baseline_seasons;
                seasons.push_back(cfg.focal_season);
                std::sort(seasons.begin(), seasons.end());
                seasons.erase(std::unique(seasons.begin(), seasons.end()), seasons.end());
                for (const auto& scope : detection_scopes()) {
                    const DailySeries s = read_series_csv(series_path(
                        series_root, SeriesKey{scope, set.id, CountMode::messages}));
                    std::vector<std::pair<int, std::vector<double>>> curves;
                    for (const int season : seasons) {
                        const SeasonSlice slice =
                            season_slice(s, SeasonWindow{cfg.anchor_start, width, season});
                        std::int64_t total = 0;
                        for (const auto v : slice.values) total += v;
                        if (total == 0) continue;
                        curves.emplace_back(season, cumulative_rescaled(slice.values));
                    }
                    if (curves.empty()) continue;
                    write_text_file(fs::path(out_dir) / set.id / "cumulative" / (scope + ".csv"),
                                    emit_cumulative_csv(scope, set.id, cfg.anchor_start, curves));
                }
            }
            std::printf("reports written under %s\n", out_dir.c_str());
        } else if (app.got_subcommand(cmd_synth)) {
            ScenarioSpec spec = load_scenario(scenario_path);
            if (seed_set) spec.seed = seed_arg;
            fs::create_directories(out_dir);
            const CorpusTotals totals =
                generate_corpus(spec, (fs::path(out_dir) / "archive.jsonl").string(),
                                (fs::path(out_dir) / "manifest.json").string());
            std::printf("generated %lld lines (%lld primary + %lld duplicates)\n",
                        (long long)totals.total_lines(), (long long)totals.primary_lines,
                        (long long)totals.duplicate_lines);
        } else if (app.got_subcommand(cmd_run)) {
            const PipelineConfig cfg = load_config_or_default(config_path);
            RunOverrides ov;
            ov.method = parse_method(method_arg);
            if (alpha_set) ov.alpha = alpha_arg;
            fs::create_directories(out_dir);
            const RunResult r = run_pipeline(cfg, run_archives, out_dir, ov);
            if (r.exit_code != 0) {
                std::fprintf(stderr, "pipeline failed at stage %s: %s\n", r.failed_stage.c_str(),
                             r.message.c_str());
                std::fprintf(stderr, "partial outputs under %s\n",
                             (fs::path(out_dir) / "failed").string().c_str());
                return r.exit_code;
            }
            std::printf("pipeline complete: %s\n", out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
