#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokevolve/detail/parallel.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/tokenizer.hpp"

namespace tokevolve {

/// Masked-token scorer: the distribution over the vocabulary for one masked
/// position, all other positions visible. A masked language model plugs in
/// here. Implementations must be safe to call concurrently.
class MaskedScorer {
public:
    virtual ~MaskedScorer() = default;

    virtual std::size_t vocab_size() const = 0;

    /// Full distribution for position `pos` of `ids`; sums to 1.
    virtual std::vector<double> distribution(std::span<const TokenId> ids, std::size_t pos) const = 0;

    /// Probability of the true token at `pos`. Override when cheaper than the
    /// full distribution.
    virtual double probability(std::span<const TokenId> ids, std::size_t pos) const {
        return distribution(ids, pos).at(ids[pos]);
    }
};

/// Same probability for every token.
class UniformScorer final : public MaskedScorer {
public:
    explicit UniformScorer(std::size_t vocab_size) : size_(vocab_size) {
        if (size_ == 0) throw Error("uniform scorer needs a non-empty vocabulary");
    }
    std::size_t vocab_size() const override { return size_; }
    std::vector<double> distribution(std::span<const TokenId>, std::size_t) const override {
        return std::vector<double>(size_, 1.0 / static_cast<double>(size_));
    }
    double probability(std::span<const TokenId>, std::size_t) const override {
        return 1.0 / static_cast<double>(size_);
    }

private:
    std::size_t size_;
};

/// Context-free unigram model with add-one smoothing:
/// P(w) = (count(w) + 1) / (N + |V|).
class UnigramScorer final : public MaskedScorer {
public:
    /// `skip` IDs (typically specials) are not counted.
    UnigramScorer(std::size_t vocab_size, std::span<const std::vector<TokenId>> corpus,
                  std::span<const TokenId> skip = {})
        : counts_(vocab_size, 0) {
        if (vocab_size == 0) throw Error("unigram scorer needs a non-empty vocabulary");
        const std::unordered_set<TokenId> skipped(skip.begin(), skip.end());
        for (const auto& seq : corpus) {
            for (const auto id : seq) {
                if (id >= vocab_size) throw Error("token id " + std::to_string(id) + " outside scorer vocabulary");
                if (skipped.contains(id)) continue;
                ++counts_[id];
                ++total_;
            }
        }
    }

    std::size_t vocab_size() const override { return counts_.size(); }
    std::uint64_t total() const noexcept { return total_; }
    std::uint64_t count(TokenId id) const { return counts_.at(id); }

    double token_probability(TokenId id) const {
        return (static_cast<double>(counts_.at(id)) + 1.0) / (static_cast<double>(total_) + static_cast<double>(counts_.size()));
    }

    std::vector<double> distribution(std::span<const TokenId>, std::size_t) const override {
        std::vector<double> p(counts_.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = token_probability(static_cast<TokenId>(i));
        return p;
    }
    double probability(std::span<const TokenId> ids, std::size_t pos) const override {
        return token_probability(ids[pos]);
    }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct PllOptions {
    double probability_floor = 1e-12;
    std::vector<TokenId> skip_ids;  ///< neither masked nor counted (specials)
};

struct SequenceScore {
    double pll = 0.0;
    std::size_t tokens = 0;
};

/// Pseudo-log-likelihood of one sequence: the sum over scored positions of
/// ln max(P(true token | rest), floor).
///
/// `evaluation_order`, when given, is a permutation of positions saying in
/// which order the scorer is queried. Terms are always summed in position
/// order, so the result does not depend on it bit for bit.
inline SequenceScore score_sequence(const MaskedScorer& scorer, std::span<const TokenId> ids,
                                    const PllOptions& options = {},
                                    std::span<const std::size_t> evaluation_order = {}) {
    if (ids.empty()) throw Error("cannot score an empty sequence");
    const std::unordered_set<TokenId> skip(options.skip_ids.begin(), options.skip_ids.end());
    std::vector<std::size_t> order;
    if (evaluation_order.empty()) {
        order.resize(ids.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
    } else {
        if (evaluation_order.size() != ids.size()) throw Error("evaluation order must be a permutation of positions");
        order.assign(evaluation_order.begin(), evaluation_order.end());
    }
    std::vector<std::optional<double>> terms(ids.size());
    for (const auto pos : order) {
        if (pos >= ids.size() || terms[pos]) throw Error("evaluation order must be a permutation of positions");
        if (skip.contains(ids[pos])) {
            terms[pos] = 0.0;
            continue;
        }
        terms[pos] = std::log(std::max(scorer.probability(ids, pos), options.probability_floor));
    }
    SequenceScore score;
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
        if (skip.contains(ids[pos])) continue;
        score.pll += *terms[pos];
        ++score.tokens;
    }
    return score;
}

inline double pseudo_log_likelihood(const MaskedScorer& scorer, std::span<const TokenId> ids,
                                    const PllOptions& options = {}) {
    return score_sequence(scorer, ids, options).pll;
}

struct PPPLReport {
    std::size_t n_tokens = 0;
    double pll_sum = 0.0;
    double pppl = 0.0;
    std::vector<SequenceScore> per_doc;
};

/// Corpus pseudo-perplexity exp(-sum PLL / N). Sequences are scored in
/// parallel and reduced in corpus order. Empty sequences contribute nothing.
inline PPPLReport pppl(const MaskedScorer& scorer, std::span<const std::vector<TokenId>> corpus,
                       const PllOptions& options = {}, std::size_t threads = 1) {
    PPPLReport report;
    report.per_doc.resize(corpus.size());
    detail::parallel_for(corpus.size(), threads, [&](std::size_t d) {
        if (!corpus[d].empty()) report.per_doc[d] = score_sequence(scorer, corpus[d], options);
    });
    for (const auto& s : report.per_doc) {
        report.pll_sum += s.pll;
        report.n_tokens += s.tokens;
    }
    if (report.n_tokens == 0) throw Error("pseudo-perplexity needs at least one scored token");
    report.pppl = std::exp(-report.pll_sum / static_cast<double>(report.n_tokens));
    return report;
}

inline std::string to_json(const PPPLReport& report) {
    nlohmann::ordered_json per_doc = nlohmann::ordered_json::array();
    for (const auto& s : report.per_doc) per_doc.push_back({{"n_tokens", s.tokens}, {"pll", s.pll}});
    nlohmann::ordered_json doc = {
        {"n_tokens", report.n_tokens}, {"pll_sum", report.pll_sum}, {"pppl", report.pppl}, {"per_doc", per_doc}};
    return doc.dump(2) + "\n";
}

struct EarlyStopDecision {
    bool stop = false;
    std::size_t best_index = 0;
    std::size_t since_best = 0;  ///< evaluations after the best one
};

/// Stop once the best (lowest) value has not been strictly improved on for
/// `patience` consecutive evaluations.
inline EarlyStopDecision early_stop_check(std::span<const double> history, std::size_t patience) {
    if (history.empty()) throw Error("early stopping needs at least one evaluation");
    if (patience < 1) throw Error("patience must be at least 1");
    EarlyStopDecision d;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i] < history[d.best_index]) d.best_index = i;
    }
    d.since_best = history.size() - 1 - d.best_index;
    d.stop = d.since_best >= patience;
    return d;
}

}  // namespace tokevolve
