#pragma once

#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokevolve/tokenizer.hpp"

namespace tokevolve {

enum class ViolationKind {
    bijection,
    special_tokens,
    base_alphabet,
    unmapped_token,
    rank_contiguity,
    closure,
    concatenation,
    well_formedness,
    reachability,
};

inline std::string_view kind_name(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::bijection: return "bijection";
        case ViolationKind::special_tokens: return "special_tokens";
        case ViolationKind::base_alphabet: return "base_alphabet";
        case ViolationKind::unmapped_token: return "unmapped_token";
        case ViolationKind::rank_contiguity: return "rank_contiguity";
        case ViolationKind::closure: return "closure";
        case ViolationKind::concatenation: return "concatenation";
        case ViolationKind::well_formedness: return "well_formedness";
        case ViolationKind::reachability: return "reachability";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::string message;

    std::string to_string() const { return std::string(kind_name(kind)) + ": " + message; }
};

namespace detail {

inline std::string describe(const MergeRule& r) {
    return "rule #" + std::to_string(r.rank) + " (" + r.left + " " + r.right + " -> " + r.result + ")";
}

}  // namespace detail

/// Checks every structural invariant of a tokenizer. Returns one diagnostic per
/// violation; an empty result means the tokenizer is sound.
inline std::vector<Violation> validate(const Tokenizer& tok) {
    std::vector<Violation> out;
    const auto& vocab = tok.vocab();
    const auto& map = tok.byte_map();
    const auto& merges = tok.merges();

    // Bijection.
    {
        std::unordered_map<std::string_view, TokenId> first;
        for (TokenId id = 0; id < vocab.size(); ++id) {
            const auto& t = vocab.tokens()[id];
            if (t.empty()) out.push_back({ViolationKind::bijection, "token id " + std::to_string(id) + " is empty"});
            auto [it, fresh] = first.emplace(t, id);
            if (!fresh) {
                out.push_back({ViolationKind::bijection, "token '" + t + "' has ids " + std::to_string(it->second) +
                                                              " and " + std::to_string(id)});
            }
        }
    }

    // Specials.
    std::set<std::string> special_texts;
    for (const auto role : kSpecialRoles) {
        const auto& text = tok.specials().text(role);
        if (!special_texts.insert(text).second) {
            out.push_back({ViolationKind::special_tokens,
                           std::string(role_name(role)) + " token '" + text + "' shares its text with another role"});
        }
        if (!vocab.contains(text)) {
            out.push_back({ViolationKind::special_tokens,
                           std::string(role_name(role)) + " token '" + text + "' missing from vocabulary"});
        }
        if (map.symbol_count(text) == std::size_t{1}) {
            out.push_back({ViolationKind::special_tokens,
                           std::string(role_name(role)) + " token '" + text + "' collides with a base symbol"});
        }
    }

    // Base alphabet.
    for (unsigned b = 0; b < 256; ++b) {
        if (!vocab.contains(map.symbol(static_cast<std::uint8_t>(b)))) {
            out.push_back({ViolationKind::base_alphabet, "base symbol for byte " + std::to_string(b) + " missing"});
        }
    }

    // Rank contiguity, closure, concatenation.
    std::unordered_map<std::string_view, std::vector<std::uint32_t>> produced_by;
    for (std::size_t i = 0; i < merges.size(); ++i) {
        const auto& r = merges[i];
        if (r.rank != i) {
            out.push_back({ViolationKind::rank_contiguity,
                           detail::describe(r) + " is at position " + std::to_string(i)});
        }
        for (const std::string* t : {&r.left, &r.right, &r.result}) {
            if (!vocab.contains(*t)) {
                out.push_back({ViolationKind::closure, detail::describe(r) + " references unknown token '" + *t + "'"});
            }
        }
        if (r.result != r.left + r.right) {
            out.push_back({ViolationKind::concatenation, detail::describe(r) + " result is not left++right"});
        }
        if (special_texts.contains(r.result)) {
            out.push_back({ViolationKind::special_tokens, detail::describe(r) + " produces a special token"});
        }
        produced_by[r.result].push_back(r.rank);
    }

    // Well-formedness: each multi-symbol token is produced by exactly one rule.
    for (TokenId id = 0; id < vocab.size(); ++id) {
        const auto& t = vocab.tokens()[id];
        if (special_texts.contains(t)) continue;
        const auto n = map.symbol_count(t);
        if (!n) {
            out.push_back({ViolationKind::unmapped_token, "token '" + t + "' (id " + std::to_string(id) +
                                                              ") is neither special nor made of mapped bytes"});
            continue;
        }
        if (*n <= 1) continue;
        const auto it = produced_by.find(t);
        const std::size_t count = it == produced_by.end() ? 0 : it->second.size();
        if (count != 1) {
            out.push_back({ViolationKind::well_formedness, "token '" + t + "' is produced by " +
                                                               std::to_string(count) + " rules (expected 1)"});
        }
    }

    // Reachability: operands are base symbols or results of earlier rules.
    for (const auto& r : merges) {
        for (const std::string* operand : {&r.left, &r.right}) {
            if (map.symbol_count(*operand) == std::size_t{1}) continue;
            const auto it = produced_by.find(*operand);
            bool earlier = false;
            if (it != produced_by.end()) {
                for (auto rank : it->second) earlier = earlier || rank < r.rank;
            }
            if (!earlier) {
                out.push_back({ViolationKind::reachability,
                               detail::describe(r) + " consumes '" + *operand + "' before any rule produces it"});
            }
        }
    }
    return out;
}

/// Throws ValidationError listing every violation, if any.
inline void require_valid(const Tokenizer& tok, std::string_view what = "tokenizer") {
    auto violations = validate(tok);
    if (violations.empty()) return;
    std::vector<std::string> details;
    for (const auto& v : violations) details.push_back(v.to_string());
    std::string message = std::string(what) + " failed validation: " + details.front();
    if (details.size() > 1) message += " (+" + std::to_string(details.size() - 1) + " more)";
    throw ValidationError(std::move(message), std::move(details));
}

}  // namespace tokevolve
