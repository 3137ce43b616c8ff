#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epiwarn/geometry.hpp"
#include "epiwarn/records.hpp"
#include "epiwarn/text.hpp"

namespace epiwarn {

// The seven study countries (ISO-style codes as used in region tables).
inline constexpr std::array<std::string_view, 7> kStudyCountries = {"DE", "ES", "FR", "IT",
                                                                    "NL", "PL", "UK"};

inline bool is_study_country(std::string_view c) {
    for (const auto s : kStudyCountries)
        if (s == c) return true;
    return false;
}

struct RegionId {
    std::string code;     // e.g. "FR1"
    std::string name;     // e.g. "Île-de-France"
    std::string country;  // one of the study countries
    std::string level;    // administrative tier tag, e.g. "NUTS1"
};

// Offline place resolver data: alias table, optional region boundaries,
// optional population counts. Aliases are stored normalized; "external"
// aliases name places outside the study countries and exist purely so the
// cross-check can veto them.
struct Gazetteer {
    std::vector<RegionId> regions;
    std::unordered_map<std::string, std::size_t> region_by_code;
    std::unordered_map<std::string, std::size_t> alias_to_region;
    std::unordered_map<std::string, std::string> alias_to_external;  // alias -> country code
    std::map<std::string, Polygon> polygons;                         // region code -> boundary
    std::map<std::string, std::int64_t> population;                  // region code -> inhabitants

    const RegionId* find_code(std::string_view code) const {
        const auto it = region_by_code.find(std::string(code));
        return it == region_by_code.end() ? nullptr : &regions[it->second];
    }

    void add_region(RegionId r) {
        if (!is_study_country(r.country))
            throw std::runtime_error("gazetteer: region " + r.code + " has non-study country " +
                                     r.country);
        if (!region_by_code.emplace(r.code, regions.size()).second)
            throw std::runtime_error("gazetteer: duplicate region code " + r.code);
        // a region's own name and code always resolve to it
        add_alias(r.name, r.code);
        add_alias(r.code, r.code);
        regions.push_back(std::move(r));
    }

    void add_alias(const std::string& alias, const std::string& code) {
        const auto it = region_by_code.find(code);
        if (it == region_by_code.end())
            throw std::runtime_error("gazetteer: alias for unknown region " + code);
        const std::string key = normalize_place_key(alias);
        if (key.empty()) throw std::runtime_error("gazetteer: empty alias for " + code);
        const auto [pos, inserted] = alias_to_region.emplace(key, it->second);
        if (!inserted && pos->second != it->second)
            throw std::runtime_error("gazetteer: alias '" + key + "' maps to two regions");
        if (alias_to_external.count(key))
            throw std::runtime_error("gazetteer: alias '" + key + "' is both region and external");
    }

    void add_external(const std::string& alias, const std::string& country) {
        const std::string key = normalize_place_key(alias);
        if (key.empty()) throw std::runtime_error("gazetteer: empty external alias");
        if (alias_to_region.count(key))
            throw std::runtime_error("gazetteer: alias '" + key + "' is both region and external");
        const auto [pos, inserted] = alias_to_external.emplace(key, country);
        if (!inserted && pos->second != country)
            throw std::runtime_error("gazetteer: external alias '" + key + "' maps to two countries");
    }

    // Load-time checks: polygons must not overlap in the interior (regions
    // partition their territory) and populations must be positive.
    void validate() const {
        for (const auto& [code, pop] : population) {
            if (pop <= 0)
                throw std::runtime_error("gazetteer: nonpositive population for " + code);
            if (!region_by_code.count(code))
                throw std::runtime_error("gazetteer: population for unknown region " + code);
        }
        for (const auto& [code, poly] : polygons) {
            if (!region_by_code.count(code))
                throw std::runtime_error("gazetteer: boundary for unknown region " + code);
            for (const auto& ring : poly.rings)
                if (ring.pts.size() < 3)
                    throw std::runtime_error("gazetteer: degenerate ring in " + code);
        }
        for (auto a = polygons.begin(); a != polygons.end(); ++a)
            for (auto b = std::next(a); b != polygons.end(); ++b)
                if (polygons_overlap(a->second, b->second))
                    throw std::runtime_error("gazetteer: boundaries of " + a->first + " and " +
                                             b->first + " overlap");
    }
};

// ---- loading ----

// Alias table: tab-separated lines, first column selects the record kind.
//   region <TAB> code <TAB> name <TAB> country <TAB> level
//   alias <TAB> place name <TAB> code
//   external <TAB> place name <TAB> country-code   (veto entries)
// '#' starts a comment line.
inline Gazetteer load_gazetteer_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read gazetteer " + path);
    Gazetteer g;
    std::vector<std::pair<std::string, std::string>> pending_aliases;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line[0] == '#') continue;
        const auto cols = split(line, '\t');
        const auto bad = [&](const char* why) {
            return std::runtime_error("gazetteer " + path + ":" + std::to_string(lineno) + ": " +
                                      why);
        };
        if (cols[0] == "region") {
            if (cols.size() < 5) throw bad("region line needs code, name, country, level");
            g.add_region(RegionId{trim(cols[1]), trim(cols[2]), trim(cols[3]), trim(cols[4])});
        } else if (cols[0] == "alias") {
            if (cols.size() < 3) throw bad("alias line needs place and code");
            pending_aliases.emplace_back(trim(cols[1]), trim(cols[2]));
        } else if (cols[0] == "external") {
            if (cols.size() < 3) throw bad("external line needs place and country");
            g.add_external(trim(cols[1]), trim(cols[2]));
        } else {
            throw bad("unknown record kind");
        }
    }
    for (const auto& [alias, code] : pending_aliases) g.add_alias(alias, code);
    return g;
}

// Boundary file: GeoJSON FeatureCollection, one feature per region, with
// `code`, `name`, and optional `population` properties; Polygon geometry
// (first ring outline, further rings holes).
inline void load_boundaries_geojson(const std::string& path, Gazetteer& g) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read boundary file " + path);
    nlohmann::json root;
    in >> root;
    if (root.value("type", "") != "FeatureCollection")
        throw std::runtime_error("boundary file is not a FeatureCollection");
    for (const auto& feature : root.at("features")) {
        const auto& props = feature.at("properties");
        const std::string code = props.at("code").get<std::string>();
        if (!g.find_code(code))
            throw std::runtime_error("boundary file names unknown region " + code);
        if (props.contains("population"))
            g.population[code] = props.at("population").get<std::int64_t>();
        const auto& geom = feature.at("geometry");
        if (geom.value("type", "") != "Polygon")
            throw std::runtime_error("region " + code + ": only Polygon geometry is supported");
        Polygon poly;
        for (const auto& ring_json : geom.at("coordinates")) {
            Ring ring;
            for (const auto& pt : ring_json)
                ring.pts.push_back(GeoPoint{pt.at(0).get<double>(), pt.at(1).get<double>()});
            // GeoJSON repeats the first vertex to close the ring; store open
            if (ring.pts.size() >= 2 && ring.pts.front().lon == ring.pts.back().lon &&
                ring.pts.front().lat == ring.pts.back().lat)
                ring.pts.pop_back();
            poly.rings.push_back(std::move(ring));
        }
        g.polygons[code] = std::move(poly);
    }
}

// ---- resolvers ----

// A raw resolver candidate: a place code plus the country it lies in. The
// country may be outside the study set (external hits) — cross_check uses
// that to veto.
struct Candidate {
    std::string code;
    std::string country;
};

// Alias lookup with the documented normalization: the full normalized
// string is tried first (multi-part external entries like "london ontario"
// must win over their first token), then comma segments left to right, the
// most specific part leading.
inline std::optional<Candidate> lookup_location(std::string_view location_text,
                                                const Gazetteer& g) {
    std::vector<std::string> keys;
    keys.push_back(normalize_place_key(location_text));
    for (const auto& segment : split(location_text, ','))
        keys.push_back(normalize_place_key(segment));
    for (const auto& key : keys) {
        if (key.empty()) continue;
        if (const auto it = g.alias_to_region.find(key); it != g.alias_to_region.end()) {
            const RegionId& r = g.regions[it->second];
            return Candidate{r.code, r.country};
        }
        if (const auto it = g.alias_to_external.find(key); it != g.alias_to_external.end())
            return Candidate{key, it->second};
    }
    return std::nullopt;
}

// Free-text resolution to a study region; external hits and misses both
// report unresolved (this operation never guesses).
inline const RegionId* resolve_location(std::string_view location_text, const Gazetteer& g) {
    const auto hit = lookup_location(location_text, g);
    if (!hit || !is_study_country(hit->country)) return nullptr;
    return g.find_code(hit->code);
}

// Coordinate resolution by even-odd point-in-polygon. Interior points
// belong to exactly one region (validated at load); points on a shared
// border deterministically take the lexicographically smallest region code.
inline const RegionId* assign_region(double lat, double lon, const Gazetteer& g) {
    if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0)
        throw std::invalid_argument("coordinates out of range");
    const GeoPoint p{lon, lat};
    const std::string* boundary_code = nullptr;
    for (const auto& [code, poly] : g.polygons) {  // std::map: codes in ascending order
        switch (locate_point(p, poly)) {
            case PointLocation::inside:
                return g.find_code(code);
            case PointLocation::boundary:
                if (!boundary_code) boundary_code = &code;
                break;
            case PointLocation::outside:
                break;
        }
    }
    return boundary_code ? g.find_code(*boundary_code) : nullptr;
}

// ---- cross-checking ----

struct ResolverVote {
    std::string resolver;
    std::optional<Candidate> candidate;  // absent = resolver abstained
};

enum class ResolutionKind { resolved, unresolved, conflict };

struct Resolution {
    std::string author_id;
    ResolutionKind kind = ResolutionKind::unresolved;
    std::optional<std::string> region_code;  // set when resolved
    bool conflict_noted = false;             // resolved by majority, not unanimity
    std::vector<ResolverVote> votes;
};

// Combine resolver votes: unanimity resolves; a strict majority resolves
// with the dissent noted; a tie is a conflict. Any candidate outside the
// study countries vetoes the author entirely (posts from non-European
// same-language countries must not leak into regional counts).
inline Resolution cross_check(std::vector<ResolverVote> votes) {
    Resolution r;
    r.votes = std::move(votes);
    std::vector<const Candidate*> cast;
    for (const auto& v : r.votes)
        if (v.candidate) cast.push_back(&*v.candidate);
    if (cast.empty()) {
        r.kind = ResolutionKind::unresolved;
        return r;
    }
    for (const auto* c : cast)
        if (!is_study_country(c->country)) {
            r.kind = ResolutionKind::unresolved;  // non-European veto
            return r;
        }
    std::map<std::string, std::size_t> tally;
    for (const auto* c : cast) ++tally[c->code];
    const auto best = std::max_element(tally.begin(), tally.end(),
                                       [](const auto& a, const auto& b) {
                                           return a.second < b.second ||
                                                  (a.second == b.second && a.first > b.first);
                                       });
    if (best->second == cast.size()) {
        r.kind = ResolutionKind::resolved;
        r.region_code = best->first;
    } else if (2 * best->second > cast.size()) {
        r.kind = ResolutionKind::resolved;
        r.region_code = best->first;
        r.conflict_noted = true;
    } else {
        r.kind = ResolutionKind::conflict;
    }
    return r;
}

// Resolve one author from profile evidence: the alias resolver votes on the
// free-text location, the polygon resolver votes when coordinates exist.
inline Resolution resolve_user(const UserProfile& user, const Gazetteer& g) {
    std::vector<ResolverVote> votes;
    {
        ResolverVote v{"alias", std::nullopt};
        if (!trim(user.location_text).empty()) v.candidate = lookup_location(user.location_text, g);
        votes.push_back(std::move(v));
    }
    if (user.point) {
        ResolverVote v{"polygon", std::nullopt};
        if (const RegionId* region = assign_region(user.point->lat, user.point->lon, g))
            v.candidate = Candidate{region->code, region->country};
        votes.push_back(std::move(v));
    }
    Resolution r = cross_check(std::move(votes));
    r.author_id = user.author_id;
    return r;
}

struct ResolutionSet {
    std::map<std::string, Resolution> by_author;
    std::int64_t resolved = 0, unresolved = 0, conflict = 0;

    // region code for an author, or nullptr when unknown/unresolved
    const std::string* region_of(const std::string& author_id) const {
        const auto it = by_author.find(author_id);
        if (it == by_author.end() || it->second.kind != ResolutionKind::resolved) return nullptr;
        return &*it->second.region_code;
    }
    double resolution_rate() const {
        const std::int64_t total = resolved + unresolved + conflict;
        return total == 0 ? 0.0 : double(resolved) / double(total);
    }
};

inline ResolutionSet resolve_users(const std::vector<UserProfile>& users, const Gazetteer& g) {
    ResolutionSet set;
    for (const auto& u : users) {
        Resolution r = resolve_user(u, g);
        switch (r.kind) {
            case ResolutionKind::resolved: ++set.resolved; break;
            case ResolutionKind::unresolved: ++set.unresolved; break;
            case ResolutionKind::conflict: ++set.conflict; break;
        }
        set.by_author.emplace(u.author_id, std::move(r));
    }
    return set;
}

// ---- persistence (one JSON object per author per line) ----

inline void write_resolutions_jsonl(const std::string& path, const ResolutionSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& [author, r] : set.by_author) {
        nlohmann::json j;
        j["user_id"] = author;
        j["outcome"] = r.kind == ResolutionKind::resolved
                           ? "resolved"
                           : (r.kind == ResolutionKind::conflict ? "conflict" : "unresolved");
        if (r.region_code) j["region"] = *r.region_code;
        if (r.conflict_noted) j["conflict_noted"] = true;
        nlohmann::json votes = nlohmann::json::array();
        for (const auto& v : r.votes) {
            nlohmann::json jv;
            jv["resolver"] = v.resolver;
            if (v.candidate) {
                jv["code"] = v.candidate->code;
                jv["country"] = v.candidate->country;
            }
            votes.push_back(std::move(jv));
        }
        j["votes"] = std::move(votes);
        out << j.dump() << '\n';
    }
}

inline ResolutionSet read_resolutions_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    ResolutionSet set;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        Resolution r;
        r.author_id = j.at("user_id").get<std::string>();
        const std::string outcome = j.at("outcome").get<std::string>();
        r.kind = outcome == "resolved"
                     ? ResolutionKind::resolved
                     : (outcome == "conflict" ? ResolutionKind::conflict
                                              : ResolutionKind::unresolved);
        if (j.contains("region")) r.region_code = j.at("region").get<std::string>();
        r.conflict_noted = j.value("conflict_noted", false);
        switch (r.kind) {
            case ResolutionKind::resolved: ++set.resolved; break;
            case ResolutionKind::unresolved: ++set.unresolved; break;
            case ResolutionKind::conflict: ++set.conflict; break;
        }
        set.by_author.emplace(r.author_id, std::move(r));
    }
    return set;
}

}  // namespace epiwarn
