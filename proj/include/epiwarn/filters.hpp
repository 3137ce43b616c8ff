#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "epiwarn/calendar.hpp"
#include "epiwarn/records.hpp"
#include "epiwarn/text.hpp"

namespace epiwarn {

// The three noise rules that separate organic symptom mentions from
// news-driven posts, in fixed order: url -> followers -> keyword.
struct FilterPolicy {
    bool url_filter_on = true;
    std::int64_t follower_cap = 2000;  // survivors have strictly fewer followers
    std::map<std::string, std::vector<std::string>> excluded_keywords;  // per language
    bool case_fold = true;
    // Keyword exclusion is meaningful only while the excluded topics are
    // news-driven; outside this window the rule is inactive.
    std::optional<DateRange> applies_to_window =
        DateRange{Date{1, 1, 1}, Date{2020, 1, 21}};

    void validate() const {
        if (follower_cap <= 0) throw std::invalid_argument("follower cap must be positive");
        for (const auto& [lang, terms] : excluded_keywords)
            if (terms.empty())
                throw std::invalid_argument("empty exclusion list for language " + lang);
    }
};

struct FilterStats {
    std::int64_t dropped_url = 0;
    std::int64_t dropped_followers = 0;
    std::int64_t dropped_keyword = 0;
    std::int64_t survivors_messages = 0;
    std::int64_t survivors_users = 0;

    std::int64_t input_messages() const {
        return dropped_url + dropped_followers + dropped_keyword + survivors_messages;
    }
};

// True iff the text contains a URL: an http:// or https:// scheme followed
// by a host character, or "www." starting a dot-separated host at a word
// boundary. Case-insensitive; pattern-based because archived records may
// lack structured link entities.
inline bool has_direct_url(std::string_view text) {
    const auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; };
    const auto is_alnum = [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    };
    const auto is_host_char = [&](char c) { return is_alnum(c) || c == '-'; };
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = lower(text[i]);
        if (c == 'h') {
            // http:// or https:// plus at least one host character
            static constexpr std::string_view kHttp = "http://";
            static constexpr std::string_view kHttps = "https://";
            for (const auto scheme : {kHttps, kHttp}) {
                if (i + scheme.size() >= n) continue;
                bool match = true;
                for (std::size_t k = 0; k < scheme.size(); ++k)
                    if (lower(text[i + k]) != scheme[k]) {
                        match = false;
                        break;
                    }
                if (match && is_alnum(text[i + scheme.size()])) return true;
            }
        } else if (c == 'w') {
            // word-boundary "www." then host "label(.label)+"
            if (i > 0 && is_alnum(text[i - 1])) continue;
            static constexpr std::string_view kWww = "www.";
            if (i + kWww.size() >= n) continue;
            bool match = true;
            for (std::size_t k = 0; k < kWww.size(); ++k)
                if (lower(text[i + k]) != kWww[k]) {
                    match = false;
                    break;
                }
            if (!match) continue;
            std::size_t j = i + kWww.size();
            int labels = 0;
            while (j < n) {
                std::size_t start = j;
                while (j < n && is_host_char(text[j])) ++j;
                if (j == start) break;  // empty label ends the host
                ++labels;
                if (j < n && text[j] == '.')
                    ++j;
                else
                    break;
            }
            if (labels >= 2) return true;
        }
    }
    return false;
}

// True iff any keyword occurs as a substring, on folded code points when
// case folding is on. No stemming; diacritics are significant.
inline bool keyword_match(std::string_view text, const std::vector<std::string>& keywords,
                          bool case_fold) {
    if (keywords.empty()) throw std::invalid_argument("keyword_match with no keywords");
    for (const auto& k : keywords)
        if (contains_folded(text, k, case_fold)) return true;
    return false;
}

// Apply the three rules to every message; the first matching rule claims
// the drop. FilterStats satisfy: inputs = survivors + the three drop
// tallies. Authors missing from the user table fail the follower rule.
inline std::pair<std::vector<MessageRecord>, FilterStats> apply_filters(
    const std::vector<MessageRecord>& messages,
    const std::unordered_map<std::string, UserProfile>& users, const FilterPolicy& policy) {
    policy.validate();
    std::vector<MessageRecord> survivors;
    FilterStats stats;
    std::set<std::string> survivor_authors;
    for (const auto& m : messages) {
        if (policy.url_filter_on && has_direct_url(m.text)) {
            ++stats.dropped_url;
            continue;
        }
        const auto user = users.find(m.author_id);
        if (user == users.end() || user->second.followers >= policy.follower_cap) {
            ++stats.dropped_followers;
            continue;
        }
        const bool keyword_window_active =
            !policy.applies_to_window || policy.applies_to_window->contains(m.posted_date);
        if (keyword_window_active) {
            const auto terms = policy.excluded_keywords.find(m.language);
            if (terms != policy.excluded_keywords.end() && !terms->second.empty() &&
                keyword_match(m.text, terms->second, policy.case_fold)) {
                ++stats.dropped_keyword;
                continue;
            }
        }
        survivor_authors.insert(m.author_id);
        survivors.push_back(m);
    }
    stats.survivors_messages = std::int64_t(survivors.size());
    stats.survivors_users = std::int64_t(survivor_authors.size());
    return {std::move(survivors), stats};
}

inline std::unordered_map<std::string, UserProfile> build_user_map(
    const std::vector<UserProfile>& users) {
    std::unordered_map<std::string, UserProfile> map;
    map.reserve(users.size());
    for (const auto& u : users) map.emplace(u.author_id, u);  // first occurrence wins
    return map;
}

inline void write_filter_stats(const std::string& path, const FilterStats& s) {
    nlohmann::json j;
    j["dropped_url"] = s.dropped_url;
    j["dropped_followers"] = s.dropped_followers;
    j["dropped_keyword"] = s.dropped_keyword;
    j["survivors_messages"] = s.survivors_messages;
    j["survivors_users"] = s.survivors_users;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace epiwarn
