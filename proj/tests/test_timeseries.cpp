#include <catch2/catch_amalgamated.hpp>

#include <epiwarn/timeseries.hpp>

#include <filesystem>

using namespace epiwarn;
namespace fs = std::filesystem;

namespace {

Gazetteer demo_gazetteer() {
    Gazetteer g;
    g.add_region(RegionId{"ITC4", "Lombardia", "IT", "NUTS2"});
    g.add_region(RegionId{"ITI4", "Lazio", "IT", "NUTS2"});
    g.add_region(RegionId{"FR1", "Île-de-France", "FR", "NUTS1"});
    g.add_alias("Milano", "ITC4");
    g.add_alias("Roma", "ITI4");
    g.add_alias("Paris", "FR1");
    g.add_external("Toronto", "CA");
    return g;
}

ResolutionSet demo_resolutions(const Gazetteer& g) {
    std::vector<UserProfile> users(4);
    users[0].author_id = "ua";
    users[0].location_text = "Milano";
    users[1].author_id = "ub";
    users[1].location_text = "Roma";
    users[2].author_id = "uc";
    users[2].location_text = "Toronto";  // vetoed -> unresolved
    users[3].author_id = "ue";
    users[3].location_text = "Paris";
    return resolve_users(users, g);
}

MessageRecord msg(std::string id, std::string author, Date d, std::string lang = "it",
                  std::string set = "pneumonia") {
    MessageRecord m;
    m.message_id = std::move(id);
    m.author_id = std::move(author);
    m.posted_at = day_number(d) * 86400 + 7200;
    m.posted_date = d;
    m.text = "text";
    m.language = std::move(lang);
    m.matched_keyword_set = std::move(set);
    return m;
}

}  // namespace

TEST_CASE("daily aggregation counts messages or distinct authors") {
    Gazetteer g = demo_gazetteer();
    ResolutionSet res = demo_resolutions(g);
    const Date d1{2019, 12, 20}, d2{2019, 12, 21};
    std::vector<MessageRecord> messages = {
        msg("m1", "ua", d1), msg("m2", "ua", d1), msg("m3", "ub", d1), msg("m4", "ua", d2),
    };
    const DateRange range{d1, d2};

    DailySeries by_msg = aggregate_daily(messages, res, g,
                                         SeriesKey{"all-countries", "pneumonia"}, range);
    REQUIRE(by_msg.values.size() == 2);
    CHECK(by_msg.values[0] == 3);
    CHECK(by_msg.values[1] == 1);
    CHECK(by_msg.start_date == d1);
    CHECK(by_msg.date_at(1) == d2);
    CHECK(by_msg.at(d1) == 3);
    CHECK(by_msg.at(Date{2019, 12, 19}) == 0);  // outside range reads as zero

    DailySeries by_user = aggregate_daily(
        messages, res, g, SeriesKey{"all-countries", "pneumonia", CountMode::unique_users},
        range);
    CHECK(by_user.values[0] == 2);  // ua twice counts once
    CHECK(by_user.values[1] == 1);
}

TEST_CASE("aggregation honours keyword set and date range") {
    Gazetteer g = demo_gazetteer();
    ResolutionSet res = demo_resolutions(g);
    const Date d{2019, 12, 20};
    std::vector<MessageRecord> messages = {
        msg("m1", "ua", d),
        msg("m2", "ua", d, "it", "dry_cough"),
        msg("m3", "ua", Date{2019, 11, 1}),  // before the range
    };
    DailySeries s = aggregate_daily(messages, res, g, SeriesKey{"all-countries", "pneumonia"},
                                    DateRange{d, d});
    REQUIRE(s.values.size() == 1);
    CHECK(s.values[0] == 1);

    CHECK_THROWS_AS(aggregate_daily(messages, res, g, SeriesKey{"all-countries", "pneumonia"},
                                    DateRange{Date{2019, 12, 21}, Date{2019, 12, 20}}),
                    std::invalid_argument);
}

TEST_CASE("scopes select regions, countries and fallback buckets") {
    Gazetteer g = demo_gazetteer();
    ResolutionSet res = demo_resolutions(g);
    const Date d{2019, 12, 20};
    std::vector<MessageRecord> messages = {
        msg("m1", "ua", d),              // resolved ITC4
        msg("m2", "ub", d),              // resolved ITI4
        msg("m3", "uc", d),              // unresolved, it -> IT bucket
        msg("m4", "ghost", d),           // unknown author, it -> IT bucket
        msg("m5", "ue", d),              // resolved FR1, Italian text stays French
        msg("m6", "ghost2", d, "en"),    // unknown author, en -> UK bucket
    };
    const DateRange range{d, d};
    const auto count = [&](const std::string& scope) {
        return aggregate_daily(messages, res, g, SeriesKey{scope, "pneumonia"}, range).values[0];
    };

    CHECK(count("all-countries") == 6);
    CHECK(count("ITC4") == 1);
    CHECK(count("ITI4") == 1);
    CHECK(count("unresolved:IT") == 2);
    CHECK(count("IT") == 4);
    CHECK(count("FR1") == 1);
    CHECK(count("FR") == 1);  // resolved region decides country, not message language
    CHECK(count("unresolved:UK") == 1);
    CHECK(count("UK") == 1);
    CHECK(count("DE") == 0);
}

TEST_CASE("a country series is the sum of its regions plus its fallback bucket") {
    Gazetteer g = demo_gazetteer();
    ResolutionSet res = demo_resolutions(g);
    std::vector<MessageRecord> messages;
    const Date start{2019, 12, 10};
    const char* authors[] = {"ua", "ub", "uc", "ghost", "ue"};
    int id = 0;
    for (int day = 0; day < 14; ++day)
        for (const char* a : authors)
            for (int k = 0; k <= (day + id) % 3; ++k)
                messages.push_back(msg("x" + std::to_string(++id), a, add_days(start, day)));

    const DateRange range{start, add_days(start, 13)};
    const auto series = [&](const std::string& scope) {
        return aggregate_daily(messages, res, g, SeriesKey{scope, "pneumonia"}, range).values;
    };
    const auto it_total = series("IT");
    const auto itc4 = series("ITC4");
    const auto iti4 = series("ITI4");
    const auto bucket = series("unresolved:IT");
    for (std::size_t i = 0; i < it_total.size(); ++i)
        CHECK(it_total[i] == itc4[i] + iti4[i] + bucket[i]);
}

TEST_CASE("Feb 29 mass folds into Feb 28 on the season axis") {
    Gazetteer g = demo_gazetteer();
    ResolutionSet res = demo_resolutions(g);
    std::vector<MessageRecord> messages;
    int id = 0;
    for (int k = 0; k < 2; ++k) messages.push_back(msg("f" + std::to_string(++id), "ua", Date{2020, 2, 28}));
    for (int k = 0; k < 3; ++k) messages.push_back(msg("f" + std::to_string(++id), "ua", Date{2020, 2, 29}));
    messages.push_back(msg("f" + std::to_string(++id), "ua", Date{2020, 3, 1}));

    DailySeries s = aggregate_daily(messages, res, g, SeriesKey{"all-countries", "pneumonia"},
                                    DateRange{Date{2020, 2, 27}, Date{2020, 3, 1}});
    auto season = season_axis_counts(s, 2019);
    REQUIRE(season.size() == 365);
    CHECK(season[180] == 5);  // Feb 28 + Feb 29
    CHECK(season[181] == 1);  // Mar 1
    CHECK(season[179] == 0);

    // a common year leaves the merged day as plain Feb 28
    DailySeries common = aggregate_daily({msg("c1", "ua", Date{2019, 2, 28})}, res, g,
                                         SeriesKey{"all-countries", "pneumonia"},
                                         DateRange{Date{2019, 2, 27}, Date{2019, 3, 1}});
    CHECK(season_axis_counts(common, 2018)[180] == 1);
}

TEST_CASE("season slices pad where the series has no data") {
    DailySeries s;
    s.key = SeriesKey{"all-countries", "pneumonia"};
    s.start_date = Date{2019, 12, 20};
    s.values = {1, 2, 3, 4, 5};  // Dec 20..24 only

    SeasonSlice slice = season_slice(s, SeasonWindow{MonthDay{12, 15}, 38, 2019});
    REQUIRE(slice.values.size() == 38);
    CHECK(slice.values[0] == 0);  // Dec 15: before the series
    CHECK(slice.values[5] == 1);  // Dec 20
    CHECK(slice.values[9] == 5);  // Dec 24
    CHECK(slice.values[10] == 0);
    CHECK(slice.padded_days == 38 - 5);

    SeasonSlice covered = season_slice(s, SeasonWindow{MonthDay{12, 20}, 5, 2019});
    CHECK(covered.padded_days == 0);
    CHECK(covered.values == std::vector<std::int64_t>{1, 2, 3, 4, 5});
}

TEST_CASE("season windows must stay inside one axis year") {
    DailySeries s;
    s.start_date = Date{2019, 8, 1};
    s.values.assign(400, 1);
    CHECK_THROWS_WITH(season_slice(s, SeasonWindow{MonthDay{8, 31}, 2, 2019}),
                      "season window crosses the axis origin");
    CHECK_THROWS_WITH(season_slice(s, SeasonWindow{MonthDay{12, 15}, 0, 2019}),
                      "season window width outside [1,120]");
    CHECK_THROWS_WITH(season_slice(s, SeasonWindow{MonthDay{12, 15}, 121, 2019}),
                      "season window width outside [1,120]");
    CHECK_NOTHROW(season_slice(s, SeasonWindow{MonthDay{8, 31}, 1, 2019}));
}

TEST_CASE("cumulative curves are monotone and end at exactly one") {
    std::vector<std::int64_t> slice{1, 2, 3, 4};
    auto curve = cumulative_rescaled(slice);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0] == 0.1);
    CHECK(curve[1] == 0.3);
    CHECK(curve[2] == 0.6);
    CHECK(curve[3] == 1.0);

    // zeros hold the curve flat
    std::vector<std::int64_t> gappy{0, 5, 0, 5};
    auto flat = cumulative_rescaled(gappy);
    CHECK(flat[0] == 0.0);
    CHECK(flat[1] == 0.5);
    CHECK(flat[2] == 0.5);
    CHECK(flat[3] == 1.0);

    // scaling all counts by a constant leaves the curve bit-identical
    std::vector<std::int64_t> scaled{7, 14, 21, 28};
    CHECK(cumulative_rescaled(scaled) == curve);

    for (int n : {1, 3, 17, 365}) {
        std::vector<std::int64_t> ones(std::size_t(n), 1);
        CHECK(cumulative_rescaled(ones).back() == 1.0);
    }

    std::vector<std::int64_t> zeros(10, 0);
    CHECK_THROWS_WITH(cumulative_rescaled(zeros), "empty season");
    std::vector<std::int64_t> negative{1, -1};
    CHECK_THROWS_AS(cumulative_rescaled(negative), std::invalid_argument);
}

TEST_CASE("language series merge pointwise into the cross-language pool") {
    DailySeries a;
    a.key = SeriesKey{"IT", "pneumonia"};
    a.start_date = Date{2019, 12, 20};
    a.values = {1, 2, 3};
    DailySeries b = a;
    b.key.scope = "FR";
    b.values = {10, 20, 30};

    DailySeries merged = merge_across_languages({a, b});
    CHECK(merged.key.scope == "all-countries");
    CHECK(merged.key.keyword_set == "pneumonia");
    CHECK(merged.values == std::vector<std::int64_t>{11, 22, 33});

    DailySeries shifted = b;
    shifted.start_date = Date{2019, 12, 21};
    CHECK_THROWS_AS(merge_across_languages({a, shifted}), std::invalid_argument);

    DailySeries other_set = b;
    other_set.key.keyword_set = "dry_cough";
    CHECK_THROWS_AS(merge_across_languages({a, other_set}), std::invalid_argument);

    DailySeries other_mode = b;
    other_mode.key.mode = CountMode::unique_users;
    CHECK_THROWS_AS(merge_across_languages({a, other_mode}), std::invalid_argument);

    CHECK_THROWS_AS(merge_across_languages({}), std::invalid_argument);
}

TEST_CASE("series files round-trip, with bucket scopes made path-safe") {
    const fs::path root =
        fs::temp_directory_path() / ("epiwarn-series-" + std::to_string(::getpid()));
    fs::create_directories(root);

    DailySeries s;
    s.key = SeriesKey{"unresolved:IT", "pneumonia", CountMode::unique_users};
    s.start_date = Date{2019, 12, 20};
    s.values = {4, 0, 7};
    write_series_csv(root, s);

    const fs::path expected = root / "pneumonia" / "unresolved-IT" / "unique_users.csv";
    REQUIRE(fs::exists(expected));

    DailySeries back = read_series_csv(expected);
    CHECK(back.key.scope == "unresolved:IT");  // header preserves the real scope
    CHECK(back.key.keyword_set == "pneumonia");
    CHECK(back.key.mode == CountMode::unique_users);
    CHECK(back.start_date == s.start_date);
    CHECK(back.values == s.values);

    std::error_code ec;
    fs::remove_all(root, ec);
}
