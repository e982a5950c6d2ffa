#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tokevolve/detail/utf8.hpp"

namespace tokevolve {

/// Sentences of one document plus the whitespace around them.
///
/// separators has one more entry than sentences: the leading whitespace, the
/// gap after each sentence but the last, and the trailing whitespace. For a
/// document without sentences it holds the whole (blank) document.
struct SentenceSplit {
    std::vector<std::string> sentences;
    std::vector<std::string> separators;

    std::string reconstruct() const {
        std::string out = separators.empty() ? std::string{} : separators.front();
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            out += sentences[i];
            if (i + 1 < separators.size()) out += separators[i + 1];
        }
        return out;
    }
};

namespace detail {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline constexpr std::string_view kEllipsis = "\xE2\x80\xA6";

// Length in bytes of a sentence terminator at pos, or 0.
inline std::size_t terminator_at(std::string_view s, std::size_t pos) {
    const char c = s[pos];
    if (c == '.' || c == '!' || c == '?') return 1;
    if (s.substr(pos).starts_with(kEllipsis)) return kEllipsis.size();
    return 0;
}

inline std::size_t closer_at(std::string_view s, std::size_t pos) {
    static constexpr std::array<std::string_view, 6> kClosers = {
        "\"", "'", ")", "\xE2\x80\x9D" /* ” */, "\xE2\x80\x99" /* ’ */, "\xC2\xBB" /* » */};
    for (auto c : kClosers) {
        if (s.substr(pos).starts_with(c)) return c.size();
    }
    return 0;
}

inline bool is_upper(char32_t cp) {
    return (cp >= U'A' && cp <= U'Z') || (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) ||
           (cp >= 0x391 && cp <= 0x3A9) || (cp >= 0x400 && cp <= 0x42F);
}

inline bool opens_sentence(std::string_view s, std::size_t pos) {
    std::size_t p = pos;
    const auto cp = next_code_point(s, p);
    if (!cp) return false;
    if (is_upper(*cp)) return true;
    switch (*cp) {
        case U'"': case U'\'': case U'(': case U'“': case U'‘': case U'„': case U'«':
            return true;
        default:
            return false;
    }
}

inline bool is_abbreviation(std::string_view word) {
    static constexpr std::array<std::string_view, 31> kAbbrev = {
        "dhr", "mevr", "mw", "dr", "drs", "ir", "ing", "prof", "mr", "mrs", "ms",
        "st", "nr", "bijv", "bv", "enz", "etc", "ca", "vs", "jr", "sr", "o.a",
        "m.a.w", "d.w.z", "i.e", "e.g", "blz", "resp", "jl", "vgl", "zgn"};
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) word.remove_prefix(1);
    if (word.size() == 1 && ((word[0] >= 'A' && word[0] <= 'Z') || (word[0] >= 'a' && word[0] <= 'z'))) {
        return true;  // initial, as in "J. Smit"
    }
    std::string lower(word);
    for (auto& c : lower) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    for (auto a : kAbbrev) {
        if (lower == a) return true;
    }
    return false;
}

}  // namespace detail

/// Rule-based sentence splitter.
///
/// A boundary is a run of terminators (. ! ? …), optionally followed by closing
/// quotes or brackets, then whitespace, then an uppercase letter or an opening
/// quote. A lone '.' after a known abbreviation or a single-letter initial is
/// not a boundary. split.reconstruct() returns the input exactly.
inline SentenceSplit split_sentences(std::string_view doc) {
    SentenceSplit split;
    std::size_t start = 0;
    while (start < doc.size() && detail::is_ascii_space(doc[start])) ++start;
    split.separators.emplace_back(doc.substr(0, start));
    if (start == doc.size()) return split;

    std::size_t pos = start;
    while (pos < doc.size()) {
        const std::size_t term = detail::terminator_at(doc, pos);
        if (term == 0) {
            ++pos;
            continue;
        }
        std::size_t end = pos;
        std::size_t n_terms = 0;
        bool only_period = true;
        while (end < doc.size()) {
            const auto t = detail::terminator_at(doc, end);
            if (t == 0) break;
            only_period = only_period && doc[end] == '.';
            end += t;
            ++n_terms;
        }
        while (end < doc.size()) {
            const auto c = detail::closer_at(doc, end);
            if (c == 0) break;
            end += c;
        }
        std::size_t next = end;
        while (next < doc.size() && detail::is_ascii_space(doc[next])) ++next;
        bool boundary = next > end && next < doc.size() && detail::opens_sentence(doc, next);
        if (boundary && only_period && n_terms == 1) {
            std::size_t w = pos;
            while (w > start && !detail::is_ascii_space(doc[w - 1])) --w;
            if (detail::is_abbreviation(doc.substr(w, pos - w))) boundary = false;
        }
        if (!boundary) {
            pos = end;
            continue;
        }
        split.sentences.emplace_back(doc.substr(start, end - start));
        split.separators.emplace_back(doc.substr(end, next - end));
        start = next;
        pos = next;
    }
    std::size_t stop = doc.size();
    while (stop > start && detail::is_ascii_space(doc[stop - 1])) --stop;
    split.sentences.emplace_back(doc.substr(start, stop - start));
    split.separators.emplace_back(doc.substr(stop));
    return split;
}

}  // namespace tokevolve
