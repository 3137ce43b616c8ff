#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace epiwarn {

// Decode one UTF-8 sequence starting at s[i]; advances i. Invalid bytes decode
// to U+FFFD and advance by one so malformed text never stalls a scan.
inline char32_t utf8_next(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t c = ((b0 & 0x1Fu) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
        i += 2;
        return c >= 0x80 ? c : 0xFFFD;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t c = ((b0 & 0x0Fu) << 12) | ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6) |
                     (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
        i += 3;
        return c >= 0x800 ? c : 0xFFFD;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t c = ((b0 & 0x07u) << 18) | ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12) |
                     ((static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6) |
                     (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
        i += 4;
        return c >= 0x10000 && c <= 0x10FFFF ? c : 0xFFFD;
    }
    ++i;
    return 0xFFFD;
}

inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) out.push_back(utf8_next(s, i));
    return out;
}

inline void utf8_encode_to(char32_t c, std::string& out) {
    if (c < 0x80) {
        out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
}

// Unicode case folding (CaseFolding.txt C+F entries) over the scripts this
// pipeline's languages can contain: ASCII, Latin-1, Latin Extended-A/B
// (Polish, French, Dutch digraphs), Greek and Cyrillic basics. Anything else
// folds to itself. Diacritics are preserved, never stripped.
inline void fold_codepoint(char32_t c, std::u32string& out) {
    // ASCII
    if (c >= U'A' && c <= U'Z') {
        out.push_back(c + 0x20);
        return;
    }
    if (c < 0x80) {
        out.push_back(c);
        return;
    }
    // Latin-1 supplement: À..Þ  -> à..þ (× U+00D7 excluded), ß -> ss (full fold)
    if (c == 0x00DF) {
        out.append(U"ss");
        return;
    }
    if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) {
        out.push_back(c + 0x20);
        return;
    }
    // Latin Extended-A: alternating upper/lower pairs with a few irregulars
    if (c >= 0x0100 && c <= 0x017F) {
        switch (c) {
            case 0x0130:  // İ -> i + combining dot above (full fold)
                out.push_back(U'i');
                out.push_back(0x0307);
                return;
            case 0x0131:  // ı (dotless i) folds to itself
            case 0x0138:  // ĸ (kra) has no uppercase
                out.push_back(c);
                return;
            case 0x0149:  // ŉ -> ʼn (full fold)
                out.push_back(0x02BC);
                out.push_back(U'n');
                return;
            case 0x0178:  // Ÿ -> ÿ
                out.push_back(0x00FF);
                return;
            case 0x017F:  // ſ (long s) -> s
                out.push_back(U's');
                return;
            default:
                break;
        }
        if (c >= 0x0139 && c <= 0x0148) {  // Ĺĺ..Ňň: odd codepoint is uppercase
            out.push_back((c % 2 == 1) ? c + 1 : c);
            return;
        }
        if (c >= 0x014A && c <= 0x0177) {  // Ŋŋ..Ŷŷ: even is uppercase
            out.push_back((c % 2 == 0) ? c + 1 : c);
            return;
        }
        if (c >= 0x0179 && c <= 0x017E) {  // ŹźŻżŽž: odd is uppercase
            out.push_back((c % 2 == 1) ? c + 1 : c);
            return;
        }
        // 0x0100..0x0137: even is uppercase
        out.push_back((c % 2 == 0) ? c + 1 : c);
        return;
    }
    // Greek
    if (c == 0x0386) { out.push_back(0x03AC); return; }
    if (c >= 0x0388 && c <= 0x038A) { out.push_back(c + 0x25); return; }
    if (c == 0x038C) { out.push_back(0x03CC); return; }
    if (c == 0x038E || c == 0x038F) { out.push_back(c + 0x3F); return; }
    if (c >= 0x0391 && c <= 0x03AB && c != 0x03A2) { out.push_back(c + 0x20); return; }
    if (c == 0x03C2) { out.push_back(0x03C3); return; }  // final sigma
    // Cyrillic
    if (c >= 0x0400 && c <= 0x040F) { out.push_back(c + 0x50); return; }
    if (c >= 0x0410 && c <= 0x042F) { out.push_back(c + 0x20); return; }
    out.push_back(c);
}

inline std::u32string case_fold(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    std::size_t i = 0;
    while (i < utf8.size()) fold_codepoint(utf8_next(utf8, i), out);
    return out;
}

// Substring containment on folded code points (no stemming, no normalization
// beyond the fold itself).
inline bool contains_folded(std::string_view haystack, std::string_view needle, bool fold) {
    if (needle.empty()) return true;
    if (!fold) return haystack.find(needle) != std::string_view::npos;
    return case_fold(haystack).find(case_fold(needle)) != std::u32string::npos;
}

inline std::string to_utf8(const std::u32string& s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) utf8_encode_to(c, out);
    return out;
}

// Lowercased-trimmed key used for gazetteer lookups: case fold, map
// punctuation to spaces (Unicode letters and digits survive), collapse runs
// of whitespace, trim.
inline std::string normalize_place_key(std::string_view s) {
    std::u32string folded = case_fold(s);
    std::u32string cleaned;
    cleaned.reserve(folded.size());
    auto is_sep = [](char32_t c) {
        if (c == U'\'' || c == 0x2019) return false;  // keep apostrophes: "Provence-Alpes-Côte d'Azur"
        if (c == U'-') return false;                  // keep hyphens
        if (c < 0x80) return !((c >= U'a' && c <= U'z') || (c >= U'0' && c <= U'9'));
        return c == 0x00A0 || c == 0x3000;  // non-ascii: only spaces separate
    };
    for (char32_t c : folded) cleaned.push_back(is_sep(c) ? U' ' : c);
    std::u32string out;
    bool in_space = true;
    for (char32_t c : cleaned) {
        if (c == U' ') {
            if (!in_space) out.push_back(U' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == U' ') out.pop_back();
    return to_utf8(out);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r' || s[a] == '\n')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r' || s[b - 1] == '\n')) --b;
    return std::string(s.substr(a, b - a));
}

}  // namespace epiwarn
