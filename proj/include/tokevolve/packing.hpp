#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokevolve/detail/parallel.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/sentences.hpp"
#include "tokevolve/tokenizer.hpp"

namespace tokevolve {

inline constexpr std::size_t kDefaultMaxTokens = 512;

/// Half-open token range [begin, end) of one sentence inside a chunk.
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct PackedChunk {
    std::vector<TokenId> token_ids;
    std::vector<SentenceSpan> sentence_spans;  ///< tile token_ids in order
    std::size_t source_doc = 0;
    std::size_t first_sentence = 0;  ///< index of the first sentence in its document
};

/// A sentence longer than the budget, emitted alone and cut to the budget.
struct OversizeWarning {
    std::size_t source_doc = 0;
    std::size_t sentence = 0;
    std::size_t tokens = 0;
    std::size_t budget = 0;

    std::string to_string() const {
        return "doc=" + std::to_string(source_doc) + " sentence=" + std::to_string(sentence) +
               " tokens=" + std::to_string(tokens) + " budget=" + std::to_string(budget) + " truncated";
    }
};

struct PackResult {
    std::vector<PackedChunk> chunks;
    std::vector<OversizeWarning> warnings;
};

/// A sentence encoded twice: as the first sentence of a chunk, and as a
/// continuation preceded by the single space that joins sentences in a chunk.
struct EncodedSentence {
    std::vector<TokenId> opening;
    std::vector<TokenId> continuing;
};

inline EncodedSentence encode_sentence(const Tokenizer& tok, const std::string& sentence) {
    return {tok.encode(sentence), tok.encode(" " + sentence)};
}

/// Greedy first-fit packing of complete sentences.
///
/// Sentences are appended to the open chunk while its length stays within
/// max_tokens; otherwise the chunk is closed and the sentence opens the next
/// one. A sentence that alone exceeds the budget becomes its own chunk,
/// truncated to max_tokens, and is reported in warnings.
inline PackResult pack_encoded(std::span<const EncodedSentence> sentences, std::size_t max_tokens,
                               std::size_t doc_id = 0) {
    if (max_tokens < 1) throw Error("max_tokens must be at least 1");
    PackResult result;
    PackedChunk current;
    auto close = [&] {
        if (!current.token_ids.empty()) result.chunks.push_back(std::move(current));
        current = PackedChunk{};
    };
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto& s = sentences[i];
        if (!current.token_ids.empty()) {
            if (current.token_ids.size() + s.continuing.size() <= max_tokens) {
                const std::size_t begin = current.token_ids.size();
                current.token_ids.insert(current.token_ids.end(), s.continuing.begin(), s.continuing.end());
                current.sentence_spans.push_back({begin, current.token_ids.size()});
                continue;
            }
            close();
        }
        if (s.opening.empty()) continue;
        current.source_doc = doc_id;
        current.first_sentence = i;
        if (s.opening.size() > max_tokens) {
            result.warnings.push_back({doc_id, i, s.opening.size(), max_tokens});
            current.token_ids.assign(s.opening.begin(), s.opening.begin() + static_cast<std::ptrdiff_t>(max_tokens));
            current.sentence_spans.push_back({0, max_tokens});
            close();
            continue;
        }
        current.token_ids = s.opening;
        current.sentence_spans.push_back({0, current.token_ids.size()});
    }
    close();
    return result;
}

inline PackResult pack_document(std::span<const std::string> sentences, const Tokenizer& tok,
                                std::size_t max_tokens = kDefaultMaxTokens, std::size_t doc_id = 0) {
    std::vector<EncodedSentence> encoded;
    encoded.reserve(sentences.size());
    for (const auto& s : sentences) encoded.push_back(encode_sentence(tok, s));
    return pack_encoded(encoded, max_tokens, doc_id);
}

/// Splits and packs every document; output order follows document order
/// regardless of the thread count.
inline PackResult pack_corpus(std::span<const std::string> docs, const Tokenizer& tok,
                              std::size_t max_tokens = kDefaultMaxTokens, std::size_t threads = 1) {
    if (max_tokens < 1) throw Error("max_tokens must be at least 1");
    std::vector<PackResult> per_doc(docs.size());
    detail::parallel_for(docs.size(), threads, [&](std::size_t d) {
        per_doc[d] = pack_document(split_sentences(docs[d]).sentences, tok, max_tokens, d);
    });
    PackResult all;
    for (auto& r : per_doc) {
        for (auto& c : r.chunks) all.chunks.push_back(std::move(c));
        for (auto& w : r.warnings) all.warnings.push_back(w);
    }
    return all;
}

/// One JSON object per chunk: {"doc_id", "ids", "spans"}.
inline std::string chunk_jsonl(const PackedChunk& chunk) {
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const auto& s : chunk.sentence_spans) spans.push_back({s.begin, s.end});
    nlohmann::ordered_json line = {{"doc_id", chunk.source_doc}, {"ids", chunk.token_ids}, {"spans", spans}};
    return line.dump() + "\n";
}

}  // namespace tokevolve
