#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokevolve/detail/parallel.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/tokenizer.hpp"
#include "tokevolve/validate.hpp"

namespace tokevolve {

struct AddedToken {
    std::string text;
    TokenId id = 0;

    friend bool operator==(const AddedToken&, const AddedToken&) = default;
};

/// Result of folding a newer tokenizer into an older one.
struct MergeOutcome {
    Tokenizer merged;
    std::vector<AddedToken> added_tokens;   ///< IDs are [|V_old|, |V_merged|), in order
    std::vector<MergeRule> appended_rules;  ///< re-ranked after every old rule
    std::vector<MergeRule> skipped_rules;   ///< new-tokenizer rules, with their original ranks
};

/// Tokens of `newer` that `older` lacks, in `newer`'s ID order.
inline std::vector<std::string> vocab_diff(const Tokenizer& older, const Tokenizer& newer) {
    std::vector<std::string> out;
    for (const auto& t : newer.vocab().tokens()) {
        if (!older.vocab().contains(t)) out.push_back(t);
    }
    return out;
}

/// Extends `older` with the tokens only `newer` knows.
///
/// The newer tokenizer's rules are walked in rank order; a rule is appended
/// (ranked after all old rules, relative order kept) iff its result is a token
/// the old vocabulary lacks, and that token gets the next free ID. Every other
/// rule is already covered by the old tokenizer and is recorded as skipped.
/// Old tokens keep their IDs.
///
/// Throws if the byte maps or special tokens differ, if either input fails
/// validation, or if an appended rule consumes a token that is neither old nor
/// produced by an earlier appended rule.
inline MergeOutcome merge_tokenizers(const Tokenizer& older, const Tokenizer& newer) {
    if (!(older.byte_map() == newer.byte_map())) throw Error("tokenizers use different byte maps");
    if (!(older.specials() == newer.specials())) throw Error("tokenizers use different special tokens");
    require_valid(older, "old tokenizer");
    require_valid(newer, "new tokenizer");

    Vocab vocab = older.vocab();
    std::vector<MergeRule> merges = older.merges();
    MergeOutcome outcome{older, {}, {}, {}};

    for (const auto& rule : newer.merges()) {
        if (vocab.contains(rule.result)) {
            outcome.skipped_rules.push_back(rule);
            continue;
        }
        for (const std::string* operand : {&rule.left, &rule.right}) {
            if (!vocab.contains(*operand)) {
                throw Error("rule #" + std::to_string(rule.rank) + " (" + rule.left + " " + rule.right +
                            ") of the new tokenizer consumes '" + *operand +
                            "', which is unreachable in the merged tokenizer");
            }
        }
        MergeRule appended = rule;
        appended.rank = static_cast<std::uint32_t>(merges.size());
        const TokenId id = vocab.add(rule.result);
        outcome.added_tokens.push_back({rule.result, id});
        outcome.appended_rules.push_back(appended);
        merges.push_back(std::move(appended));
    }

    // Every token of newer beyond its base alphabet and specials is a rule result,
    // so the appended tokens are exactly the set difference.
    const auto diff = vocab_diff(older, newer);
    if (diff.size() != outcome.added_tokens.size()) {
        throw Error("new tokenizer has " + std::to_string(diff.size()) + " novel tokens but only " +
                    std::to_string(outcome.added_tokens.size()) + " are produced by its rules");
    }

    outcome.merged = Tokenizer(std::move(vocab), std::move(merges), older.specials(), older.byte_map());
    require_valid(outcome.merged, "merged tokenizer");
    return outcome;
}

/// Recovers the outcome of a merge from the old and merged tokenizers alone.
/// Requires `merged` to extend `older`: same leading tokens and rules.
inline MergeOutcome reconstruct_outcome(const Tokenizer& older, const Tokenizer& merged) {
    const auto& ov = older.vocab().tokens();
    const auto& mv = merged.vocab().tokens();
    if (mv.size() < ov.size() || !std::equal(ov.begin(), ov.end(), mv.begin())) {
        throw Error("merged tokenizer does not keep the old token IDs");
    }
    const auto& om = older.merges();
    const auto& mm = merged.merges();
    if (mm.size() < om.size() || !std::equal(om.begin(), om.end(), mm.begin())) {
        throw Error("merged tokenizer does not keep the old merge rules as a prefix");
    }
    MergeOutcome outcome{merged, {}, {}, {}};
    for (std::size_t id = ov.size(); id < mv.size(); ++id) {
        outcome.added_tokens.push_back({mv[id], static_cast<TokenId>(id)});
    }
    outcome.appended_rules.assign(mm.begin() + static_cast<std::ptrdiff_t>(om.size()), mm.end());
    return outcome;
}

// ---------------------------------------------------------------------------
// Diff report

struct DiffEntry {
    std::string token;
    TokenId id = 0;
    std::uint64_t frequency = 0;
    bool has_boundary_variant = false;
    bool capitalization_duplicate = false;
    std::string category;
};

struct DiffReport {
    std::vector<DiffEntry> entries;
};

/// User-supplied token -> category labels.
using CategoryMap = std::unordered_map<std::string, std::string>;

namespace detail {

inline constexpr std::string_view kBoundary = "\xC4\xA0";  // 'Ġ'

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

// Key under which case variants collide: boundary flag + lowercased body.
inline std::string case_key(std::string_view token) {
    const bool boundary = token.starts_with(kBoundary);
    const auto body = boundary ? token.substr(kBoundary.size()) : token;
    return (boundary ? "1" : "0") + ascii_lower(body);
}

}  // namespace detail

/// Annotates every added token of `outcome`.
///
/// frequency: how often the token occurs in the merged tokenizer's encoding of
/// `docs`. has_boundary_variant: the same token with/without a leading 'Ġ' is
/// also in the merged vocabulary. capitalization_duplicate: another token with
/// the same boundary state differs from it only in (ASCII) letter case.
inline DiffReport build_diff_report(const MergeOutcome& outcome, std::span<const std::string> docs,
                                    const CategoryMap& categories = {}, std::size_t threads = 1) {
    const auto& tok = outcome.merged;
    const auto& vocab = tok.vocab();

    std::unordered_map<std::string, std::size_t> case_groups;
    for (TokenId id = 0; id < vocab.size(); ++id) {
        if (!tok.is_special(id)) ++case_groups[detail::case_key(vocab.tokens()[id])];
    }

    std::unordered_map<TokenId, std::size_t> slot;
    for (std::size_t i = 0; i < outcome.added_tokens.size(); ++i) slot.emplace(outcome.added_tokens[i].id, i);

    // Per-document hit lists, reduced in document order.
    std::vector<std::vector<std::size_t>> hits(docs.size());
    detail::parallel_for(docs.size(), threads, [&](std::size_t d) {
        for (const auto id : tok.encode(docs[d])) {
            if (const auto it = slot.find(id); it != slot.end()) hits[d].push_back(it->second);
        }
    });
    std::vector<std::uint64_t> frequency(outcome.added_tokens.size(), 0);
    for (const auto& doc_hits : hits) {
        for (const auto i : doc_hits) ++frequency[i];
    }

    DiffReport report;
    for (std::size_t i = 0; i < outcome.added_tokens.size(); ++i) {
        const auto& added = outcome.added_tokens[i];
        DiffEntry e;
        e.token = added.text;
        e.id = added.id;
        e.frequency = frequency[i];
        const std::string_view t = added.text;
        if (t.starts_with(detail::kBoundary)) {
            const auto bare = t.substr(detail::kBoundary.size());
            e.has_boundary_variant = !bare.empty() && vocab.contains(bare);
        } else {
            e.has_boundary_variant = vocab.contains(std::string(detail::kBoundary) + added.text);
        }
        e.capitalization_duplicate = case_groups[detail::case_key(t)] > 1;
        if (const auto it = categories.find(added.text); it != categories.end()) e.category = it->second;
        report.entries.push_back(std::move(e));
    }
    return report;
}

namespace detail {

inline std::string flags_field(const DiffEntry& e) {
    std::string f;
    if (e.has_boundary_variant) f += "boundary_variant";
    if (e.capitalization_duplicate) f += std::string(f.empty() ? "" : ",") + "capitalization_duplicate";
    return f.empty() ? "-" : f;
}

inline std::string tsv_clean(std::string s) {
    for (auto& c : s) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace detail

inline std::string to_tsv(const DiffReport& report) {
    std::string out = "token\tfrequency\tflags\tcategory\n";
    for (const auto& e : report.entries) {
        out += detail::tsv_clean(e.token) + "\t" + std::to_string(e.frequency) + "\t" + detail::flags_field(e) + "\t" +
               detail::tsv_clean(e.category) + "\n";
    }
    return out;
}

inline std::string to_json(const DiffReport& report) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        arr.push_back({{"token", e.token},
                       {"id", e.id},
                       {"frequency", e.frequency},
                       {"has_boundary_variant", e.has_boundary_variant},
                       {"capitalization_duplicate", e.capitalization_duplicate},
                       {"category", e.category}});
    }
    return arr.dump(2, ' ', false) + "\n";
}

/// Reads "token<TAB>category" lines; blank lines and lines starting with '#'
/// are ignored.
inline CategoryMap load_categories(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open category file " + path.string());
    CategoryMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw ParseError(path.string(), lineno, "expected '<token>\\t<category>'");
        }
        map[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return map;
}

}  // namespace tokevolve
