#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tokevolve/byte_map.hpp"

namespace tokevolve {

namespace detail {

constexpr bool is_split_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace detail

/// Splits raw text into word pieces (raw bytes, not yet mapped).
///
/// A word is a maximal run of non-whitespace bytes. A single space directly in
/// front of a word is folded into that word; any other whitespace forms a piece
/// of its own. Concatenating the pieces reproduces `text` exactly. Only ASCII
/// whitespace separates words.
inline std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> pieces;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!detail::is_split_space(text[i])) {
            std::size_t j = i;
            while (j < text.size() && !detail::is_split_space(text[j])) ++j;
            pieces.push_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && detail::is_split_space(text[j])) ++j;
        // Whitespace run [i, j). Hand its final space to the following word.
        const bool word_follows = j < text.size();
        if (word_follows && text[j - 1] == ' ') {
            if (j - 1 > i) pieces.push_back(text.substr(i, j - 1 - i));
            std::size_t k = j;
            while (k < text.size() && !detail::is_split_space(text[k])) ++k;
            pieces.push_back(text.substr(j - 1, k - j + 1));
            i = k;
        } else {
            pieces.push_back(text.substr(i, j - i));
            i = j;
        }
    }
    return pieces;
}

/// Pre-tokenizes `text` into mapped symbol strings, one per word piece.
/// A word-initial space shows up as a leading 'Ġ'.
inline std::vector<std::string> pre_tokenize(std::string_view text,
                                             const ByteUnicodeMap& byte_map = build_byte_map()) {
    std::vector<std::string> words;
    for (auto piece : split_words(text)) words.push_back(byte_map.encode(piece));
    return words;
}

}  // namespace tokevolve
