#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tokevolve/detail/parallel.hpp"
#include "tokevolve/detail/utf8.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/pre_tokenizer.hpp"
#include "tokevolve/tokenizer.hpp"

namespace tokevolve {

struct TrainConfig {
    std::size_t target_vocab_size = 0;
    std::uint64_t min_pair_frequency = 2;
    SpecialTokens specials;
    std::size_t threads = 1;  ///< workers for word counting; 0 = hardware

    std::size_t base_size() const { return 256 + specials.in_order().size(); }
};

/// Pre-tokenized word (mapped symbol string) -> occurrence count. Ordered so
/// that iteration is deterministic.
using WordCounts = std::map<std::string, std::uint64_t>;

/// Counts pre-tokenized words over all documents. The result does not depend
/// on document order or thread count. Throws naming the first document that is
/// not valid UTF-8.
inline WordCounts count_words(std::span<const std::string> docs, std::size_t threads = 1,
                              const ByteUnicodeMap& byte_map = build_byte_map()) {
    const std::size_t workers = detail::worker_count(threads, docs.size());
    std::vector<std::unordered_map<std::string, std::uint64_t>> partial(workers);
    // Contiguous document blocks per worker; the merge below is a sum, so the
    // partitioning does not affect the result.
    detail::parallel_for(workers, workers, [&](std::size_t w) {
        const std::size_t begin = docs.size() * w / workers;
        const std::size_t end = docs.size() * (w + 1) / workers;
        auto& counts = partial[w];
        for (std::size_t d = begin; d < end; ++d) {
            if (const auto bad = detail::find_invalid_utf8(docs[d])) {
                throw Error("document " + std::to_string(d) + ": invalid UTF-8 at byte " + std::to_string(*bad));
            }
            for (auto piece : split_words(docs[d])) ++counts[byte_map.encode(piece)];
        }
    });
    WordCounts total;
    for (auto& counts : partial) {
        for (auto& [word, n] : counts) total[word] += n;
    }
    return total;
}

/// Pair (left, right) -> weighted adjacency count.
using PairCounts = std::map<std::pair<std::string, std::string>, std::uint64_t>;

/// Counts adjacent token pairs. `segmentation[i]` is the current token
/// sequence of the i-th word of `words` (in iteration order).
inline PairCounts count_pairs(const WordCounts& words, std::span<const std::vector<std::string>> segmentation) {
    if (segmentation.size() != words.size()) throw Error("segmentation size does not match word counts");
    PairCounts pairs;
    std::size_t i = 0;
    for (const auto& [word, n] : words) {
        const auto& seg = segmentation[i++];
        for (std::size_t k = 0; k + 1 < seg.size(); ++k) pairs[{seg[k], seg[k + 1]}] += n;
    }
    return pairs;
}

/// Splits each word into its single mapped symbols.
inline std::vector<std::vector<std::string>> base_segmentation(const WordCounts& words) {
    std::vector<std::vector<std::string>> seg;
    seg.reserve(words.size());
    for (const auto& [word, n] : words) {
        std::vector<std::string> symbols;
        std::size_t pos = 0;
        while (pos < word.size()) {
            const std::size_t at = pos;
            if (!detail::next_code_point(word, pos)) throw Error("word '" + word + "' is not valid UTF-8");
            symbols.push_back(word.substr(at, pos - at));
        }
        seg.push_back(std::move(symbols));
    }
    return seg;
}

/// One accepted merge during training.
struct TrainStep {
    std::string left;
    std::string right;
    std::uint64_t frequency = 0;     ///< pair count when selected
    std::uint64_t tokens_after = 0;  ///< corpus length in tokens after the merge
};

struct TrainResult {
    Tokenizer tokenizer;
    std::vector<TrainStep> steps;
    std::uint64_t initial_tokens = 0;
    std::vector<std::string> warnings;
};

namespace detail {

class PairTrainer {
public:
    PairTrainer(const WordCounts& words, const TrainConfig& config)
        : config_(config), tok_(base_tokenizer(config.specials)) {
        tokens_ = tok_.vocab().tokens();
        for (const auto& s : config.specials.in_order()) specials_.insert(s);
        for (const auto& t : tokens_) known_.insert(t);
        const auto& map = tok_.byte_map();
        counts_.reserve(words.size());
        segs_.reserve(words.size());
        for (const auto& [word, n] : words) {
            std::vector<TokenId> seg;
            for (char c : map.decode(word)) seg.push_back(tok_.byte_id(static_cast<std::uint8_t>(c)));
            total_tokens_ += seg.size() * n;
            counts_.push_back(n);
            segs_.push_back(std::move(seg));
        }
        for (std::uint32_t w = 0; w < segs_.size(); ++w) add_word(w, +1);
        flush();
        initial_tokens_ = total_tokens_;
    }

    TrainResult run() {
        TrainResult result{tok_, {}, initial_tokens_, {}};
        std::vector<MergeRule> merges;
        while (tokens_.size() < config_.target_vocab_size) {
            const auto best = select();
            if (!best) break;
            const auto [left, right, freq] = *best;
            const auto merged = static_cast<TokenId>(tokens_.size());
            tokens_.push_back(tokens_[left] + tokens_[right]);
            known_.insert(tokens_.back());
            merges.push_back(make_rule(tokens_[left], tokens_[right], static_cast<std::uint32_t>(merges.size())));
            apply(left, right, merged);
            result.steps.push_back({tokens_[left], tokens_[right], freq, total_tokens_});
        }
        if (counts_.empty() && config_.target_vocab_size > config_.base_size()) {
            result.warnings.push_back("empty corpus: returning base vocabulary of " +
                                      std::to_string(tokens_.size()) + " tokens");
        }
        result.tokenizer = Tokenizer(Vocab(tokens_), std::move(merges), config_.specials);
        return result;
    }

private:
    struct Candidate {
        std::uint64_t count;
        TokenId left;
        TokenId right;
    };

    struct Order {
        const std::vector<std::string>* tokens;
        bool operator()(const Candidate& a, const Candidate& b) const {
            if (a.count != b.count) return a.count > b.count;
            const auto& ta = *tokens;
            if (int c = ta[a.left].compare(ta[b.left]); c != 0) return c < 0;
            if (int c = ta[a.right].compare(ta[b.right]); c != 0) return c < 0;
            return false;
        }
    };

    static std::uint64_t key(TokenId a, TokenId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

    // Queue pair-count changes for word w (sign +1 adds, -1 removes).
    void add_word(std::uint32_t w, int sign) {
        const auto& seg = segs_[w];
        for (std::size_t k = 0; k + 1 < seg.size(); ++k) {
            const auto p = key(seg[k], seg[k + 1]);
            delta_[p] += sign * static_cast<std::int64_t>(counts_[w]);
            if (sign > 0) where_[p].push_back(w);
        }
    }

    void flush() {
        for (const auto& [p, d] : delta_) {
            if (d == 0) continue;
            auto& count = pair_count_[p];
            const auto left = static_cast<TokenId>(p >> 32);
            const auto right = static_cast<TokenId>(p & 0xFFFFFFFFu);
            const bool banned = banned_.contains(p);
            if (count > 0 && !banned) queue_.erase(Candidate{count, left, right});
            count = static_cast<std::uint64_t>(static_cast<std::int64_t>(count) + d);
            if (count > 0 && !banned) queue_.insert(Candidate{count, left, right});
        }
        delta_.clear();
    }

    // Highest-count eligible pair meeting the frequency floor.
    std::optional<std::tuple<TokenId, TokenId, std::uint64_t>> select() {
        while (!queue_.empty()) {
            const Candidate top = *queue_.begin();
            if (top.count < config_.min_pair_frequency) return std::nullopt;
            const std::string joined = tokens_[top.left] + tokens_[top.right];
            // A pair whose concatenation already names a token (or a special
            // literal) would break the vocabulary bijection.
            if (known_.contains(joined) || specials_.contains(joined)) {
                queue_.erase(queue_.begin());
                banned_.insert(key(top.left, top.right));
                continue;
            }
            return std::make_tuple(top.left, top.right, top.count);
        }
        return std::nullopt;
    }

    void apply(TokenId left, TokenId right, TokenId merged) {
        const auto p = key(left, right);
        auto affected = std::move(where_[p]);
        where_.erase(p);
        std::vector<TokenId> next;
        for (const auto w : affected) {
            if (stamp_.size() < segs_.size()) stamp_.assign(segs_.size(), 0);
            if (stamp_[w] == merged) continue;
            stamp_[w] = merged;
            auto& seg = segs_[w];
            bool hit = false;
            for (std::size_t k = 0; k + 1 < seg.size() && !hit; ++k) hit = seg[k] == left && seg[k + 1] == right;
            if (!hit) continue;
            add_word(w, -1);
            next.clear();
            for (std::size_t k = 0; k < seg.size();) {
                if (k + 1 < seg.size() && seg[k] == left && seg[k + 1] == right) {
                    next.push_back(merged);
                    k += 2;
                } else {
                    next.push_back(seg[k++]);
                }
            }
            total_tokens_ -= (seg.size() - next.size()) * counts_[w];
            seg.swap(next);
            add_word(w, +1);
        }
        flush();
    }

    const TrainConfig& config_;
    Tokenizer tok_;
    std::vector<std::string> tokens_;
    std::unordered_set<std::string> known_;
    std::unordered_set<std::string> specials_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::vector<TokenId>> segs_;
    std::uint64_t total_tokens_ = 0;
    std::uint64_t initial_tokens_ = 0;

    std::unordered_map<std::uint64_t, std::uint64_t> pair_count_;
    std::unordered_map<std::uint64_t, std::int64_t> delta_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
    std::unordered_set<std::uint64_t> banned_;
    std::vector<TokenId> stamp_;
    std::set<Candidate, Order> queue_{Order{&tokens_}};
};

inline void check_config(const TrainConfig& config) {
    if (config.min_pair_frequency < 1) throw Error("min_pair_frequency must be at least 1");
    if (config.target_vocab_size < config.base_size()) {
        throw Error("target vocabulary size " + std::to_string(config.target_vocab_size) +
                    " is below the base size " + std::to_string(config.base_size()) + " (256 bytes + specials)");
    }
}

}  // namespace detail

/// Trains from pre-counted words, recording every accepted merge.
///
/// Starting from specials + 256 byte symbols, the most frequent adjacent pair
/// (ties: lexicographically smallest (left, right)) becomes the next rule until
/// the vocabulary reaches the target size or no pair reaches
/// min_pair_frequency. Pairs whose concatenation is already a token, or a
/// special literal, are never selected.
inline TrainResult train_words(const WordCounts& words, const TrainConfig& config) {
    detail::check_config(config);
    detail::PairTrainer trainer(words, config);
    return trainer.run();
}

inline TrainResult train_with_trace(std::span<const std::string> docs, const TrainConfig& config) {
    detail::check_config(config);
    return train_words(count_words(docs, config.threads), config);
}

inline Tokenizer train(std::span<const std::string> docs, const TrainConfig& config) {
    return train_with_trace(docs, config).tokenizer;
}

}  // namespace tokevolve
