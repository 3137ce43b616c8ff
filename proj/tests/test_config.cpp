#include <catch2/catch_amalgamated.hpp>

#include <epiwarn/config.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace epiwarn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("epiwarn-config-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

}  // namespace

TEST_CASE("ini parsing keeps section order and accumulates repeated keys") {
    std::istringstream in(
        "# comment\n"
        "[alpha]\n"
        "k = 1\n"
        "k = 2\n"
        "other = x\n"
        "; semicolon comment\n"
        "[beta]\n"
        "k=3\n"
        "\n"
        "[alpha]\n"
        "k = 4\n");
    IniFile f = parse_ini(in);
    REQUIRE(f.section_order.size() == 2);
    CHECK(f.section_order[0] == "alpha");
    CHECK(f.section_order[1] == "beta");
    CHECK(f.has_section("alpha"));
    CHECK_FALSE(f.has_section("gamma"));

    auto last = f.get("alpha", "k");
    REQUIRE(last.has_value());
    CHECK(*last == "4");  // last assignment wins

    auto all = f.get_all("alpha", "k");
    REQUIRE(all.size() == 3);
    CHECK(all[0] == "1");
    CHECK(all[1] == "2");
    CHECK(all[2] == "4");

    CHECK_FALSE(f.get("alpha", "missing").has_value());
    CHECK(f.get_all("gamma", "k").empty());
}

TEST_CASE("ini errors carry origin and line number") {
    {
        std::istringstream in("key = outside\n");
        try {
            parse_ini(in, "demo.ini");
            FAIL("expected parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "demo.ini:1: key outside any section");
        }
    }
    {
        std::istringstream in("[ok]\n[broken\n");
        try {
            parse_ini(in, "demo.ini");
            FAIL("expected parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "demo.ini:2: unterminated section header");
        }
    }
    {
        std::istringstream in("[s]\nno equals sign\n");
        CHECK_THROWS_AS(parse_ini(in), std::runtime_error);
    }
    {
        std::istringstream in("[s]\n= value\n");
        CHECK_THROWS_AS(parse_ini(in), std::runtime_error);
    }
    {
        std::istringstream in("[]\n");
        CHECK_THROWS_AS(parse_ini(in), std::runtime_error);
    }
}

TEST_CASE("typed config helpers reject malformed values") {
    CHECK(detail::to_int("42", "x") == 42);
    CHECK(detail::to_int("-7", "x") == -7);
    CHECK_THROWS_AS(detail::to_int("4.2", "x"), std::runtime_error);
    CHECK_THROWS_AS(detail::to_int("seven", "x"), std::runtime_error);

    CHECK(detail::to_double("0.05", "x") == 0.05);
    CHECK_THROWS_AS(detail::to_double("abc", "x"), std::runtime_error);

    CHECK(detail::to_bool("on", "x"));
    CHECK(detail::to_bool("true", "x"));
    CHECK_FALSE(detail::to_bool("off", "x"));
    CHECK_FALSE(detail::to_bool("0", "x"));
    CHECK_THROWS_AS(detail::to_bool("maybe", "x"), std::runtime_error);

    CHECK(detail::to_date("2019-12-16", "x") == Date{2019, 12, 16});
    CHECK_THROWS_AS(detail::to_date("2019-13-01", "x"), std::runtime_error);
    CHECK(detail::to_month_day("12-15", "x") == MonthDay{12, 15});
    CHECK_THROWS_AS(detail::to_month_day("13-01", "x"), std::runtime_error);
}

TEST_CASE("default keyword sets cover all seven languages") {
    auto sets = default_keyword_sets();
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].id == "pneumonia");
    CHECK(sets[1].id == "dry_cough");
    CHECK(sets[2].id == "coronavirus");
    for (const auto& s : sets) {
        for (const auto lang : kLanguages) {
            auto it = s.terms_by_language.find(std::string(lang));
            REQUIRE(it != s.terms_by_language.end());
            CHECK_FALSE(it->second.empty());
        }
    }
    CHECK(default_exclusion_lists().size() == 7);
}

TEST_CASE("keyword sections override the shipped defaults") {
    std::istringstream in(
        "[keywords.fever.it]\n"
        "term = febbre\n"
        "term = febbre alta\n"
        "[keywords.fever.en]\n"
        "term = fever\n");
    IniFile f = parse_ini(in);
    auto sets = keyword_sets_from_ini(f);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].id == "fever");
    REQUIRE(sets[0].terms_by_language.count("it") == 1);
    CHECK(sets[0].terms_by_language.at("it") ==
          std::vector<std::string>{"febbre", "febbre alta"});
    CHECK(sets[0].terms_by_language.at("en") == std::vector<std::string>{"fever"});

    // no keyword sections -> defaults
    std::istringstream empty("[study]\nfirst = 2014-12-01\n");
    IniFile g = parse_ini(empty);
    CHECK(keyword_sets_from_ini(g).size() == 3);
}

TEST_CASE("keyword sections validate language and shape") {
    {
        std::istringstream in("[keywords.fever.xx]\nterm = x\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_AS(keyword_sets_from_ini(f), std::runtime_error);
    }
    {
        std::istringstream in("[keywords.fever]\nterm = x\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_AS(keyword_sets_from_ini(f), std::runtime_error);
    }
    {
        std::istringstream in("[keywords.fever.it]\nnote = no terms here\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_AS(keyword_sets_from_ini(f), std::runtime_error);
    }
}

TEST_CASE("pipeline config picks up every configured section") {
    TempDir tmp;
    write_file(tmp.path / "gaz.tsv", "# empty gazetteer placeholder\n");
    write_file(tmp.path / "cfg.ini",
               "[study]\n"
               "first = 2015-01-01\n"
               "last = 2020-02-15\n"
               "[ingest]\n"
               "corrupt_threshold = 0.25\n"
               "[schema]\n"
               "id = tweet_id\n"
               "lang = language\n"
               "[filters]\n"
               "url_filter = off\n"
               "follower_cap = 5000\n"
               "case_fold = false\n"
               "exclude_until = 2020-01-31\n"
               "[filters.exclude.it]\n"
               "term = cina\n"
               "[season]\n"
               "anchor_start = 12-01\n"
               "anchor_end = 01-15\n"
               "focal = 2019-2020\n"
               "baseline = 2017-2018\n"
               "baseline = 2018-2019\n"
               "[scan]\n"
               "width_min = 40\n"
               "width_max = 60\n"
               "method = ad\n"
               "sample_mode = day_values\n"
               "exact_crossover = 500\n"
               "alpha = 0.05\n"
               "alpha = 0.01\n"
               "[report]\n"
               "news_cutoff = 2020-01-20\n"
               "[paths]\n"
               "gazetteer = gaz.tsv\n"
               "out = out\n");

    PipelineConfig c = load_pipeline_config((tmp.path / "cfg.ini").string());
    CHECK(c.ingest.study_range.first == Date{2015, 1, 1});
    CHECK(c.ingest.study_range.last == Date{2020, 2, 15});
    CHECK(c.ingest.corrupt_threshold == 0.25);
    CHECK(c.ingest.schema.id == "tweet_id");
    CHECK(c.ingest.schema.lang == "language");
    CHECK(c.ingest.schema.text == "text");  // unmapped fields keep defaults

    CHECK_FALSE(c.filters.url_filter_on);
    CHECK(c.filters.follower_cap == 5000);
    CHECK_FALSE(c.filters.case_fold);
    REQUIRE(c.filters.applies_to_window.has_value());
    CHECK(c.filters.applies_to_window->last == Date{2020, 1, 31});
    REQUIRE(c.filters.excluded_keywords.count("it") == 1);
    CHECK(c.filters.excluded_keywords.at("it") == std::vector<std::string>{"cina"});
    CHECK(c.filters.excluded_keywords.count("en") == 0);  // explicit sections replace defaults

    CHECK(c.anchor_start == MonthDay{12, 1});
    CHECK(c.anchor_end == MonthDay{1, 15});
    CHECK(c.focal_season == 2019);
    CHECK(c.baseline_seasons == std::vector<int>{2017, 2018});
    CHECK(c.anchor_width_days() == 46);

    CHECK(c.scan.width_min == 40);
    CHECK(c.scan.width_max == 60);
    CHECK(c.scan.method == TestMethod::ad);
    CHECK(c.scan.sample_mode == SampleMode::day_values);
    CHECK(c.scan.exact_crossover == 500);
    CHECK(c.alphas == std::vector<double>{0.05, 0.01});
    CHECK(c.news_cutoff == Date{2020, 1, 20});

    CHECK(c.gazetteer_path == (tmp.path / "gaz.tsv").string());
    CHECK(c.out_dir == "out");
    CHECK(c.config_hash != 0);
}

TEST_CASE("pipeline config defaults apply when sections are missing") {
    std::istringstream in("[study]\nfirst = 2014-12-01\n");
    IniFile f = parse_ini(in);
    PipelineConfig c = pipeline_config_from_ini(f);
    CHECK(c.filters.url_filter_on);
    CHECK(c.filters.follower_cap == 2000);
    CHECK(c.anchor_start == MonthDay{12, 15});
    CHECK(c.anchor_end == MonthDay{1, 21});
    CHECK(c.anchor_width_days() == 38);
    CHECK(c.focal_season == 2019);
    CHECK(c.baseline_seasons == std::vector<int>{2014, 2015, 2016, 2017, 2018});
    CHECK(c.scan.width_min == 50);
    CHECK(c.scan.width_max == 70);
    CHECK(c.scan.method == TestMethod::ks);
    CHECK(c.alphas == std::vector<double>{0.05, 0.10});
    CHECK(c.filters.excluded_keywords.size() == 7);
    // news cutoff falls back to the exclusion window end
    CHECK(c.news_cutoff == Date{2020, 1, 21});
}

TEST_CASE("news cutoff falls back to never-expiring exclusion sensibly") {
    std::istringstream in("[filters]\nexclude_until = never\n");
    IniFile f = parse_ini(in);
    PipelineConfig c = pipeline_config_from_ini(f);
    CHECK_FALSE(c.filters.applies_to_window.has_value());
    CHECK(c.news_cutoff == Date{2020, 1, 21});  // struct default survives
}

TEST_CASE("pipeline config rejects bad enum and range values") {
    {
        std::istringstream in("[scan]\nmethod = chi2\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_WITH(pipeline_config_from_ini(f), "config: scan.method must be ks or ad");
    }
    {
        std::istringstream in("[scan]\nsample_mode = weekly\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_AS(pipeline_config_from_ini(f), std::runtime_error);
    }
    {
        std::istringstream in("[scan]\nalpha = 1.5\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_WITH(pipeline_config_from_ini(f), "config: alpha outside (0,1)");
    }
    {
        std::istringstream in("[season]\nfocal = 2019-2022\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_AS(pipeline_config_from_ini(f), std::runtime_error);
    }
    {
        std::istringstream in("[paths]\ngazetteer = /definitely/not/here.tsv\n");
        IniFile f = parse_ini(in);
        CHECK_THROWS_AS(pipeline_config_from_ini(f), std::runtime_error);
    }
}

TEST_CASE("config hash is the fnv1a of the raw bytes") {
    TempDir tmp;
    const std::string body = "[study]\nfirst = 2014-12-01\n";
    write_file(tmp.path / "cfg.ini", body);
    PipelineConfig c = load_pipeline_config((tmp.path / "cfg.ini").string());
    CHECK(c.config_hash == fnv1a_64(body));

    // a one-byte difference must change the hash
    CHECK(fnv1a_64("a") != fnv1a_64("b"));
    CHECK(hex64(0) == "0000000000000000");
    CHECK(hex64(0xdeadbeef) == "00000000deadbeef");
    CHECK(hex64(c.config_hash).size() == 16);
}
