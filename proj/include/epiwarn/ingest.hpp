#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epiwarn/calendar.hpp"
#include "epiwarn/records.hpp"
#include "epiwarn/text.hpp"

namespace epiwarn {

// Field-name mapping from an archive dialect to the documented names. The
// first five are required per line; the rest are picked up when present.
struct SchemaMap {
    std::string id = "id";
    std::string user_id = "user_id";
    std::string created_at = "created_at";
    std::string text = "text";
    std::string lang = "lang";
    std::string followers_count = "followers_count";
    std::string location = "location";
    std::string friends_count = "friends_count";
    std::string statuses_count = "statuses_count";
    std::string lat = "lat";
    std::string lon = "lon";
    std::string keyword_set = "keyword_set";
};

// A named keyword group with per-language term lists, e.g. the terms that
// select "pneumonia" messages in each of the seven languages.
struct KeywordSet {
    std::string id;
    std::map<std::string, std::vector<std::string>> terms_by_language;
};

struct IngestOptions {
    SchemaMap schema;
    DateRange study_range{Date{2014, 12, 1}, Date{2020, 3, 1}};
    double corrupt_threshold = 0.5;  // fraction of malformed lines that is fatal
    std::vector<KeywordSet> keyword_sets;
};

struct ParsedArchive {
    std::vector<MessageRecord> messages;
    std::vector<UserProfile> users;
    ArchiveStats stats;
};

namespace detail {

inline std::optional<std::string> json_string(const nlohmann::json& j, const std::string& key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

inline std::optional<std::int64_t> json_int(const nlohmann::json& j, const std::string& key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) return std::nullopt;
    return it->get<std::int64_t>();
}

inline std::optional<double> json_number(const nlohmann::json& j, const std::string& key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
}

// Primary subtag of a BCP-47-ish language tag, lowercased: "en-GB" -> "en".
inline std::string primary_language_subtag(std::string_view tag) {
    std::string out;
    for (const char c : tag) {
        if (c == '-' || c == '_') break;
        out += (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c;
    }
    return out;
}

}  // namespace detail

// Assign the record to the first configured keyword group any of whose
// terms (for the record's language) occurs in the folded text. Records no
// group claims are labeled "unmatched" and fall out of per-group series.
inline std::string derive_keyword_set(const std::string& text, const std::string& language,
                                      const std::vector<KeywordSet>& sets) {
    for (const auto& set : sets) {
        const auto it = set.terms_by_language.find(language);
        if (it == set.terms_by_language.end()) continue;
        for (const auto& term : it->second)
            if (contains_folded(text, term, true)) return set.id;
    }
    return "unmatched";
}

struct ValidatedRecord {
    MessageRecord message;
    std::optional<UserProfile> profile;  // present when the line carries user metadata
};

struct Rejection {
    std::string reason;  // missing_field | bad_timestamp | bad_language | out_of_range
};

// Check one syntactically parsed line against the record invariants. Total:
// every parsed line yields either a record or a machine-readable reason.
inline std::pair<std::optional<ValidatedRecord>, Rejection> validate_record(
    const nlohmann::json& raw, const IngestOptions& opts) {
    const auto& schema = opts.schema;
    const auto id = detail::json_string(raw, schema.id);
    const auto user_id = detail::json_string(raw, schema.user_id);
    const auto text = detail::json_string(raw, schema.text);
    const auto lang_raw = detail::json_string(raw, schema.lang);
    if (!id || !user_id || !text || !lang_raw || id->empty() || user_id->empty())
        return {std::nullopt, {"missing_field"}};

    std::optional<std::int64_t> ts;
    if (const auto created = detail::json_string(raw, schema.created_at)) {
        ts = parse_timestamp_utc(*created);
        if (!ts) return {std::nullopt, {"bad_timestamp"}};
    } else if (const auto epoch = detail::json_int(raw, schema.created_at)) {
        ts = *epoch;
    } else {
        return {std::nullopt, {"missing_field"}};
    }

    const std::string lang = detail::primary_language_subtag(*lang_raw);
    if (!is_study_language(lang)) return {std::nullopt, {"bad_language"}};

    const Date date = utc_date_of(*ts);
    if (!opts.study_range.contains(date)) return {std::nullopt, {"out_of_range"}};

    ValidatedRecord v;
    v.message.message_id = *id;
    v.message.author_id = *user_id;
    v.message.posted_at = *ts;
    v.message.posted_date = date;
    v.message.text = *text;
    v.message.language = lang;
    if (const auto set = detail::json_string(raw, schema.keyword_set); set && !set->empty())
        v.message.matched_keyword_set = *set;
    else
        v.message.matched_keyword_set = derive_keyword_set(*text, lang, opts.keyword_sets);

    if (const auto followers = detail::json_int(raw, schema.followers_count);
        followers && *followers >= 0) {
        UserProfile p;
        p.author_id = *user_id;
        p.followers = *followers;
        if (const auto f = detail::json_int(raw, schema.friends_count); f && *f >= 0)
            p.friends = *f;
        if (const auto s = detail::json_int(raw, schema.statuses_count); s && *s >= 0)
            p.statuses = *s;
        if (const auto loc = detail::json_string(raw, schema.location)) p.location_text = *loc;
        const auto lat = detail::json_number(raw, schema.lat);
        const auto lon = detail::json_number(raw, schema.lon);
        if (lat && lon && *lat >= -90.0 && *lat <= 90.0 && *lon >= -180.0 && *lon <= 180.0)
            p.point = GeoPoint{*lon, *lat};
        v.profile = std::move(p);
    }
    return {std::move(v), {}};
}

// Streaming archive parser with first-occurrence-wins dedup across all
// consumed archives. Malformed lines are tallied, not fatal, unless they
// exceed the corruption threshold at finish().
class ArchiveReader {
  public:
    explicit ArchiveReader(IngestOptions opts) : opts_(std::move(opts)) {}

    void consume(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;  // blank separator lines are not records
            ++out_.stats.total_records;
            nlohmann::json raw = nlohmann::json::parse(line, nullptr, false);
            if (raw.is_discarded() || !raw.is_object()) {
                reject("malformed_line");
                continue;
            }
            auto [validated, rejection] = validate_record(raw, opts_);
            if (!validated) {
                reject(rejection.reason);
                continue;
            }
            if (!seen_messages_.insert(validated->message.message_id).second) {
                ++out_.stats.duplicates;
                continue;
            }
            seen_authors_.insert(validated->message.author_id);
            ++out_.stats.unique_messages;
            out_.messages.push_back(std::move(validated->message));
            if (validated->profile && seen_profiles_.insert(validated->profile->author_id).second)
                out_.users.push_back(std::move(*validated->profile));
        }
        if (in.bad()) throw std::runtime_error("archive stream read failure");
    }

    // Corruption is judged on lines that violate the input format itself
    // (unparseable, missing fields, unreadable timestamps) — records that
    // are merely out of scope (language, date) do not count toward it.
    ParsedArchive finish() {
        out_.stats.unique_users = std::int64_t(seen_authors_.size());
        const auto& reasons = out_.stats.rejection_reasons;
        std::int64_t malformed = 0;
        for (const char* key : {"malformed_line", "missing_field", "bad_timestamp"})
            if (const auto it = reasons.find(key); it != reasons.end()) malformed += it->second;
        if (out_.stats.total_records > 0 &&
            double(malformed) > opts_.corrupt_threshold * double(out_.stats.total_records))
            throw std::runtime_error("corrupt archive: " + std::to_string(malformed) + " of " +
                                     std::to_string(out_.stats.total_records) +
                                     " lines malformed");
        return std::move(out_);
    }

  private:
    void reject(const std::string& reason) {
        ++out_.stats.rejected_malformed;
        ++out_.stats.rejection_reasons[reason];
    }

    IngestOptions opts_;
    ParsedArchive out_;
    std::unordered_set<std::string> seen_messages_;
    std::unordered_set<std::string> seen_authors_;
    std::unordered_set<std::string> seen_profiles_;
};

inline ParsedArchive parse_archive(std::istream& in, const IngestOptions& opts) {
    ArchiveReader reader(opts);
    reader.consume(in);
    return reader.finish();
}

// ---- normalized stage files (JSONL with canonical field names) ----

inline void write_messages_jsonl(const std::string& path,
                                 const std::vector<MessageRecord>& messages) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& m : messages) {
        nlohmann::json j;
        j["id"] = m.message_id;
        j["user_id"] = m.author_id;
        j["posted_at"] = m.posted_at;
        j["text"] = m.text;
        j["lang"] = m.language;
        j["keyword_set"] = m.matched_keyword_set;
        out << j.dump() << '\n';
    }
}

inline std::vector<MessageRecord> read_messages_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<MessageRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        MessageRecord m;
        m.message_id = j.at("id").get<std::string>();
        m.author_id = j.at("user_id").get<std::string>();
        m.posted_at = j.at("posted_at").get<std::int64_t>();
        m.posted_date = utc_date_of(m.posted_at);
        m.text = j.at("text").get<std::string>();
        m.language = j.at("lang").get<std::string>();
        m.matched_keyword_set = j.at("keyword_set").get<std::string>();
        out.push_back(std::move(m));
    }
    return out;
}

inline void write_users_jsonl(const std::string& path, const std::vector<UserProfile>& users) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& u : users) {
        nlohmann::json j;
        j["user_id"] = u.author_id;
        j["followers"] = u.followers;
        j["friends"] = u.friends;
        j["statuses"] = u.statuses;
        j["location"] = u.location_text;
        if (u.point) {
            j["lat"] = u.point->lat;
            j["lon"] = u.point->lon;
        }
        out << j.dump() << '\n';
    }
}

inline std::vector<UserProfile> read_users_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<UserProfile> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        UserProfile u;
        u.author_id = j.at("user_id").get<std::string>();
        u.followers = j.at("followers").get<std::int64_t>();
        u.friends = j.at("friends").get<std::int64_t>();
        u.statuses = j.at("statuses").get<std::int64_t>();
        u.location_text = j.at("location").get<std::string>();
        if (j.contains("lat") && j.contains("lon"))
            u.point = GeoPoint{j.at("lon").get<double>(), j.at("lat").get<double>()};
        out.push_back(std::move(u));
    }
    return out;
}

inline void write_archive_stats(const std::string& path, const ArchiveStats& s) {
    nlohmann::json j;
    j["total_records"] = s.total_records;
    j["unique_messages"] = s.unique_messages;
    j["unique_users"] = s.unique_users;
    j["duplicates"] = s.duplicates;
    j["rejected_malformed"] = s.rejected_malformed;
    j["rejection_reasons"] = s.rejection_reasons;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace epiwarn
