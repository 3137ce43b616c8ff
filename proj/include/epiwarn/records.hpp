#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "epiwarn/calendar.hpp"
#include "epiwarn/geometry.hpp"

namespace epiwarn {

// The seven message languages the pipeline accepts.
inline constexpr std::array<std::string_view, 7> kLanguages = {"de", "en", "es", "fr",
                                                               "it", "nl", "pl"};

inline bool is_study_language(std::string_view lang) {
    for (const auto l : kLanguages)
        if (l == lang) return true;
    return false;
}

// One social-media post, normalized. `matched_keyword_set` names the keyword
// group that selected the message into the corpus (messages matching no
// configured group carry "unmatched").
struct MessageRecord {
    std::string message_id;
    std::string author_id;
    std::int64_t posted_at = 0;  // UTC, seconds since the epoch
    Date posted_date;            // UTC calendar date of posted_at
    std::string text;
    std::string language;
    std::string matched_keyword_set;
};

// Author metadata as carried by archive records. Coordinates are optional
// profile geotags used as an extra resolver vote when present.
struct UserProfile {
    std::string author_id;
    std::int64_t followers = 0;
    std::int64_t friends = 0;
    std::int64_t statuses = 0;
    std::string location_text;
    std::optional<GeoPoint> point;
};

// Corpus-level tallies for one parsed archive set.
// Conservation: total_records = unique_messages + duplicates + rejected_malformed.
struct ArchiveStats {
    std::int64_t total_records = 0;
    std::int64_t unique_messages = 0;
    std::int64_t unique_users = 0;
    std::int64_t duplicates = 0;
    std::int64_t rejected_malformed = 0;
    // breakdown of rejected_malformed by reason:
    // malformed_line, missing_field, bad_timestamp, bad_language, out_of_range
    std::map<std::string, std::int64_t> rejection_reasons;
};

}  // namespace epiwarn
