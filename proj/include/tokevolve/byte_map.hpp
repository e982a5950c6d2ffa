#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "tokevolve/detail/utf8.hpp"
#include "tokevolve/error.hpp"

namespace tokevolve {

/// Bijection between the 256 byte values and printable unicode stand-ins.
///
/// Printable Latin-1 bytes ('!'..'~', U+00A1..U+00AC, U+00AE..U+00FF) map to
/// themselves; every other byte is shifted into U+0100 and up in byte order.
/// The space byte therefore renders as 'Ġ' (U+0120), the word boundary mark
/// that shows up in front of word-initial tokens.
class ByteUnicodeMap {
public:
    static const ByteUnicodeMap& standard() {
        static const ByteUnicodeMap map;
        return map;
    }

    char32_t forward(std::uint8_t byte) const noexcept { return forward_[byte]; }

    std::optional<std::uint8_t> inverse(char32_t cp) const noexcept {
        const auto it = inverse_.find(cp);
        if (it == inverse_.end()) return std::nullopt;
        return it->second;
    }

    /// UTF-8 rendering of the stand-in for `byte`.
    const std::string& symbol(std::uint8_t byte) const noexcept { return symbols_[byte]; }

    /// Maps raw bytes to their stand-in string.
    std::string encode(std::string_view bytes) const {
        std::string out;
        out.reserve(bytes.size() * 2);
        for (char c : bytes) out += symbols_[static_cast<std::uint8_t>(c)];
        return out;
    }

    /// Maps a stand-in string back to raw bytes; throws if `mapped` contains a
    /// code point outside the image of the map.
    std::string decode(std::string_view mapped) const {
        std::string out;
        out.reserve(mapped.size());
        std::size_t pos = 0;
        while (pos < mapped.size()) {
            const std::size_t at = pos;
            const auto cp = detail::next_code_point(mapped, pos);
            if (!cp) throw Error("invalid UTF-8 in mapped token at byte " + std::to_string(at));
            const auto b = inverse(*cp);
            if (!b) {
                throw Error("code point U+" + hex(*cp) + " is not a mapped byte");
            }
            out.push_back(static_cast<char>(*b));
        }
        return out;
    }

    /// True if `mapped` is non-empty and consists only of mapped-byte symbols.
    bool is_mapped(std::string_view mapped) const {
        if (mapped.empty()) return false;
        std::size_t pos = 0;
        while (pos < mapped.size()) {
            const auto cp = detail::next_code_point(mapped, pos);
            if (!cp || !inverse(*cp)) return false;
        }
        return true;
    }

    /// Number of mapped symbols in `mapped` (code points), or nullopt when it
    /// is not a mapped string.
    std::optional<std::size_t> symbol_count(std::string_view mapped) const {
        if (!is_mapped(mapped)) return std::nullopt;
        std::size_t pos = 0;
        std::size_t n = 0;
        while (pos < mapped.size()) {
            detail::next_code_point(mapped, pos);
            ++n;
        }
        return n;
    }

    friend bool operator==(const ByteUnicodeMap& a, const ByteUnicodeMap& b) {
        return a.forward_ == b.forward_;
    }

private:
    ByteUnicodeMap() {
        auto printable = [](unsigned b) {
            return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
        };
        char32_t shifted = 256;
        for (unsigned b = 0; b < 256; ++b) {
            forward_[b] = printable(b) ? static_cast<char32_t>(b) : shifted++;
            inverse_.emplace(forward_[b], static_cast<std::uint8_t>(b));
            symbols_[b] = detail::to_utf8(forward_[b]);
        }
    }

    static std::string hex(char32_t cp) {
        static constexpr char kDigits[] = "0123456789ABCDEF";
        std::string s;
        for (int shift = 20; shift >= 0; shift -= 4) {
            const auto d = (cp >> shift) & 0xF;
            if (!s.empty() || d != 0 || shift <= 12) s.push_back(kDigits[d]);
        }
        return s;
    }

    std::array<char32_t, 256> forward_{};
    std::unordered_map<char32_t, std::uint8_t> inverse_;
    std::array<std::string, 256> symbols_;
};

/// Builds the byte-to-unicode map. Deterministic; every call yields an equal map.
inline const ByteUnicodeMap& build_byte_map() { return ByteUnicodeMap::standard(); }

}  // namespace tokevolve
