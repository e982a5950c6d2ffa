#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "oracles/naive_bpe.hpp"
#include "tokevolve/tokevolve.hpp"

namespace testutil {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(TOKEVOLVE_FIXTURE_DIR) / name;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("tokevolve_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Random valid unicode: ASCII, whitespace and control characters, Latin-1,
/// Greek, CJK, combining marks and emoji.
inline std::string random_unicode(std::mt19937_64& rng, std::size_t max_len = 40) {
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<int> cls(0, 9);
    const std::size_t len = len_dist(rng);
    std::string s;
    auto pick = [&](char32_t lo, char32_t hi) {
        return static_cast<char32_t>(std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng));
    };
    for (std::size_t i = 0; i < len; ++i) {
        char32_t cp = 0;
        switch (cls(rng)) {
            case 0: case 1: case 2: cp = pick(U'a', U'z'); break;
            case 3: cp = U" \t\n  "[pick(0, 4)]; break;
            case 4: cp = pick(0x00, 0x1F); break;
            case 5: cp = pick(0x21, 0x7F); break;
            case 6: cp = pick(0xA0, 0x17F); break;
            case 7: cp = pick(0x391, 0x3C9); break;
            case 8: cp = pick(0x4E00, 0x4EFF); break;
            default: cp = pick(0, 1) ? pick(0x1F600, 0x1F64F) : pick(0x300, 0x36F); break;
        }
        tokevolve::detail::append_utf8(s, cp);
    }
    return s;
}

/// Random lowercase text over a small alphabet, words separated by spaces.
inline std::string random_words(std::mt19937_64& rng, std::size_t max_words, const std::string& alphabet = "abcde") {
    std::uniform_int_distribution<std::size_t> nwords(1, max_words);
    std::uniform_int_distribution<std::size_t> wlen(1, 6);
    std::uniform_int_distribution<std::size_t> letter(0, alphabet.size() - 1);
    std::string s;
    const auto n = nwords(rng);
    for (std::size_t w = 0; w < n; ++w) {
        if (w) s += ' ';
        const auto l = wlen(rng);
        for (std::size_t i = 0; i < l; ++i) s += alphabet[letter(rng)];
    }
    return s;
}

inline std::vector<std::string> token_texts(const tokevolve::Tokenizer& tok, std::span<const tokevolve::TokenId> ids) {
    std::vector<std::string> out;
    for (const auto id : ids) out.push_back(tok.vocab().token(id));
    return out;
}

/// Reference encoding: pre-tokenize, then the single-step oracle applier.
inline std::vector<std::string> reference_encode(const tokevolve::Tokenizer& tok, const std::string& text) {
    std::map<oracle::Pair, std::uint32_t> ranks;
    for (const auto& r : tok.merges()) ranks.emplace(oracle::Pair{r.left, r.right}, r.rank);
    std::vector<std::string> out;
    for (const auto& word : tokevolve::pre_tokenize(text)) {
        for (auto& t : oracle::reference_apply(oracle::code_points(word), ranks)) out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<std::string> read_fixture(const std::string& name) {
    return tokevolve::read_corpus(fixture(name), tokevolve::CorpusFormat::jsonl);
}

inline tokevolve::Tokenizer train_on(std::span<const std::string> docs, std::size_t vocab_size,
                                     std::uint64_t min_freq = 2) {
    tokevolve::TrainConfig config;
    config.target_vocab_size = vocab_size;
    config.min_pair_frequency = min_freq;
    return tokevolve::train(docs, config);
}

// Base tokenizer plus left-to-right prefix chains for each (mapped) word:
// "abc" adds (a, b) -> ab and (ab, c) -> abc.
inline tokevolve::Tokenizer chain_tokenizer(const std::vector<std::string>& words) {
    tokevolve::Vocab vocab = tokevolve::base_tokenizer().vocab();
    std::vector<tokevolve::MergeRule> merges;
    for (const auto& w : words) {
        const auto symbols = oracle::code_points(w);
        std::string acc = symbols.front();
        for (std::size_t i = 1; i < symbols.size(); ++i) {
            auto rule = tokevolve::make_rule(acc, symbols[i], static_cast<std::uint32_t>(merges.size()));
            acc = rule.result;
            if (vocab.contains(acc)) continue;
            vocab.add(acc);
            merges.push_back(std::move(rule));
        }
    }
    return tokevolve::Tokenizer(std::move(vocab), std::move(merges));
}

}  // namespace testutil
