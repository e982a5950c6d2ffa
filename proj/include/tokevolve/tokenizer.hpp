#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tokevolve/byte_map.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/pre_tokenizer.hpp"

namespace tokevolve {

using TokenId = std::uint32_t;
inline constexpr TokenId kNoToken = std::numeric_limits<TokenId>::max();

/// (left, right) -> result, applied in ascending rank order.
struct MergeRule {
    std::string left;
    std::string right;
    std::string result;
    std::uint32_t rank = 0;

    friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

/// Build a rule whose result is the concatenation of its operands.
inline MergeRule make_rule(std::string left, std::string right, std::uint32_t rank) {
    std::string result = left + right;
    return MergeRule{std::move(left), std::move(right), std::move(result), rank};
}

enum class SpecialRole { bos, pad, eos, unk, mask };
inline constexpr std::array<SpecialRole, 5> kSpecialRoles = {
    SpecialRole::bos, SpecialRole::pad, SpecialRole::eos, SpecialRole::unk, SpecialRole::mask};

inline std::string_view role_name(SpecialRole role) {
    switch (role) {
        case SpecialRole::bos: return "bos";
        case SpecialRole::pad: return "pad";
        case SpecialRole::eos: return "eos";
        case SpecialRole::unk: return "unk";
        case SpecialRole::mask: return "mask";
    }
    return "?";
}

/// Literal text of the five control tokens. Trained tokenizers place them at
/// the lowest IDs in kSpecialRoles order.
struct SpecialTokens {
    std::string bos = "<s>";
    std::string pad = "<pad>";
    std::string eos = "</s>";
    std::string unk = "<unk>";
    std::string mask = "<mask>";

    const std::string& text(SpecialRole role) const {
        switch (role) {
            case SpecialRole::bos: return bos;
            case SpecialRole::pad: return pad;
            case SpecialRole::eos: return eos;
            case SpecialRole::unk: return unk;
            case SpecialRole::mask: return mask;
        }
        return unk;
    }
    std::string& text(SpecialRole role) {
        return const_cast<std::string&>(std::as_const(*this).text(role));
    }

    std::vector<std::string> in_order() const { return {bos, pad, eos, unk, mask}; }

    friend bool operator==(const SpecialTokens&, const SpecialTokens&) = default;
};

namespace detail {

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

}  // namespace detail

/// Token <-> ID table. IDs are the positions in the token list.
class Vocab {
public:
    Vocab() = default;

    explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        index_.reserve(tokens_.size());
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            index_.emplace(tokens_[i], static_cast<TokenId>(i));  // first occurrence wins
        }
    }

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }

    const std::string& token(TokenId id) const {
        if (id >= tokens_.size()) {
            throw Error("token id " + std::to_string(id) + " out of range [0, " +
                        std::to_string(tokens_.size()) + ")");
        }
        return tokens_[id];
    }

    std::optional<TokenId> find(std::string_view text) const {
        const auto it = index_.find(text);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(std::string_view text) const { return index_.find(text) != index_.end(); }

    /// Appends a token and returns its ID. Throws if it is already present.
    TokenId add(std::string text) {
        if (contains(text)) throw Error("token '" + text + "' already in vocabulary");
        const auto id = static_cast<TokenId>(tokens_.size());
        index_.emplace(text, id);
        tokens_.push_back(std::move(text));
        return id;
    }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// Number of distinct token strings; equals size() iff the table is a bijection.
    std::size_t distinct() const noexcept { return index_.size(); }

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId, detail::StringHash, std::equal_to<>> index_;
};

enum class SpecialPolicy { skip, render };

/// Byte-level BPE tokenizer. Immutable once constructed; every const member is
/// safe to call concurrently.
///
/// The constructor accepts any combination of parts so that broken tokenizers
/// can be inspected with validate(). Rules whose operands or result are not in
/// the vocabulary are ignored by encode().
class Tokenizer {
public:
    Tokenizer(Vocab vocab, std::vector<MergeRule> merges, SpecialTokens specials = {},
              const ByteUnicodeMap& byte_map = build_byte_map())
        : vocab_(std::move(vocab)),
          merges_(std::move(merges)),
          specials_(std::move(specials)),
          byte_map_(&byte_map) {
        index();
    }

    const Vocab& vocab() const noexcept { return vocab_; }
    const std::vector<MergeRule>& merges() const noexcept { return merges_; }
    const SpecialTokens& specials() const noexcept { return specials_; }
    const ByteUnicodeMap& byte_map() const noexcept { return *byte_map_; }

    std::optional<TokenId> special_id(SpecialRole role) const { return vocab_.find(specials_.text(role)); }

    bool is_special(TokenId id) const noexcept { return id < special_mask_.size() && special_mask_[id]; }

    /// IDs of the special tokens present in the vocabulary, ascending.
    std::vector<TokenId> special_ids() const {
        std::vector<TokenId> ids;
        for (std::size_t i = 0; i < special_mask_.size(); ++i) {
            if (special_mask_[i]) ids.push_back(static_cast<TokenId>(i));
        }
        return ids;
    }

    /// ID of the single-symbol token for a raw byte.
    TokenId byte_id(std::uint8_t b) const {
        const TokenId id = base_ids_[b];
        if (id == kNoToken) {
            throw Error("base symbol for byte " + std::to_string(b) + " missing from vocabulary");
        }
        return id;
    }

    std::vector<TokenId> encode(std::string_view text) const {
        std::vector<TokenId> out;
        out.reserve(text.size() / 2 + 1);
        for (auto piece : split_words(text)) encode_piece(piece, out);
        return out;
    }

    /// Encodes one pre-tokenized piece of raw bytes, appending to `out`.
    void encode_piece(std::string_view raw, std::vector<TokenId>& out) const {
        std::vector<TokenId> syms;
        syms.reserve(raw.size());
        for (char c : raw) syms.push_back(byte_id(static_cast<std::uint8_t>(c)));
        apply_merges(syms);
        out.insert(out.end(), syms.begin(), syms.end());
    }

    /// Runs the lowest-rank-first merge loop over an initial symbol sequence.
    void apply_merges(std::vector<TokenId>& syms) const {
        std::vector<TokenId> next;
        while (syms.size() > 1) {
            const MergeTarget* best = nullptr;
            TokenId best_left = 0;
            TokenId best_right = 0;
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                const auto it = merge_index_.find(pair_key(syms[i], syms[i + 1]));
                if (it != merge_index_.end() && (!best || it->second.rank < best->rank)) {
                    best = &it->second;
                    best_left = syms[i];
                    best_right = syms[i + 1];
                }
            }
            if (!best) break;
            // Every occurrence of the winning pair, scanning left to right.
            next.clear();
            for (std::size_t i = 0; i < syms.size();) {
                if (i + 1 < syms.size() && syms[i] == best_left && syms[i + 1] == best_right) {
                    next.push_back(best->result);
                    i += 2;
                } else {
                    next.push_back(syms[i]);
                    ++i;
                }
            }
            syms.swap(next);
        }
    }

    std::string decode(std::span<const TokenId> ids, SpecialPolicy policy = SpecialPolicy::skip) const {
        std::string out;
        for (const TokenId id : ids) {
            if (id >= vocab_.size()) {
                throw Error("cannot decode token id " + std::to_string(id) + ": vocabulary has " +
                            std::to_string(vocab_.size()) + " entries");
            }
            if (is_special(id)) {
                if (policy == SpecialPolicy::render) out += vocab_.token(id);
                continue;
            }
            out += byte_map_->decode(vocab_.token(id));
        }
        return out;
    }

    /// Raw bytes a non-special token stands for.
    std::string surface(TokenId id) const { return byte_map_->decode(vocab_.token(id)); }

private:
    struct MergeTarget {
        std::uint32_t rank;
        TokenId result;
    };

    static std::uint64_t pair_key(TokenId a, TokenId b) noexcept {
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    void index() {
        base_ids_.fill(kNoToken);
        for (unsigned b = 0; b < 256; ++b) {
            if (const auto id = vocab_.find(byte_map_->symbol(static_cast<std::uint8_t>(b)))) base_ids_[b] = *id;
        }
        special_mask_.assign(vocab_.size(), false);
        for (const auto role : kSpecialRoles) {
            if (const auto id = special_id(role)) special_mask_[*id] = true;
        }
        merge_index_.reserve(merges_.size());
        for (const auto& rule : merges_) {
            const auto l = vocab_.find(rule.left);
            const auto r = vocab_.find(rule.right);
            const auto res = vocab_.find(rule.result);
            if (!l || !r || !res) continue;
            auto [it, inserted] = merge_index_.try_emplace(pair_key(*l, *r), MergeTarget{rule.rank, *res});
            if (!inserted && rule.rank < it->second.rank) it->second = MergeTarget{rule.rank, *res};
        }
    }

    Vocab vocab_;
    std::vector<MergeRule> merges_;
    SpecialTokens specials_;
    const ByteUnicodeMap* byte_map_;

    std::array<TokenId, 256> base_ids_{};
    std::vector<bool> special_mask_;
    std::unordered_map<std::uint64_t, MergeTarget> merge_index_;
};

inline std::vector<TokenId> encode(const Tokenizer& tokenizer, std::string_view text) {
    return tokenizer.encode(text);
}

inline std::string decode(const Tokenizer& tokenizer, std::span<const TokenId> ids,
                          SpecialPolicy policy = SpecialPolicy::skip) {
    return tokenizer.decode(ids, policy);
}

/// Structural equality: same vocabulary, merge order, specials and byte map.
inline bool same_structure(const Tokenizer& a, const Tokenizer& b) {
    return a.vocab() == b.vocab() && a.merges() == b.merges() && a.specials() == b.specials() &&
           a.byte_map() == b.byte_map();
}

/// Tokenizer with the specials followed by the 256 single-byte symbols and no
/// merges.
inline Tokenizer base_tokenizer(const SpecialTokens& specials = {},
                                const ByteUnicodeMap& byte_map = build_byte_map()) {
    std::vector<std::string> tokens = specials.in_order();
    for (unsigned b = 0; b < 256; ++b) tokens.push_back(byte_map.symbol(static_cast<std::uint8_t>(b)));
    return Tokenizer(Vocab(std::move(tokens)), {}, specials, byte_map);
}

}  // namespace tokevolve
