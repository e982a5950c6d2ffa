#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tokevolve/detail/parallel.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/evolve.hpp"
#include "tokevolve/tokenizer.hpp"

namespace tokevolve {

/// Dense rows x dim float matrix; row i is the embedding of token ID i.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), values_(rows * dim, 0.0f) {}
    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
        : rows_(rows), dim_(dim), values_(std::move(values)) {
        if (values_.size() != rows_ * dim_) throw Error("embedding value count does not match rows x dim");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<float> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }
    std::span<const float> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }

    const std::vector<float>& values() const noexcept { return values_; }

    bool all_finite() const {
        for (float v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    /// Bitwise equality of shape and every value.
    friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
        return a.rows_ == b.rows_ && a.dim_ == b.dim_ &&
               (a.values_.empty() ||
                std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0);
    }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> values_;
};

/// i.i.d. normal(0, stddev) matrix from a fixed seed.
inline EmbeddingMatrix random_embeddings(std::size_t rows, std::size_t dim, double stddev, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, stddev);
    std::vector<float> values(rows * dim);
    for (auto& v : values) v = static_cast<float>(normal(rng));
    return EmbeddingMatrix(rows, dim, std::move(values));
}

enum class InitStrategy { subtoken_mean, gaussian };

inline InitStrategy parse_init_strategy(const std::string& name) {
    if (name == "subtoken-mean") return InitStrategy::subtoken_mean;
    if (name == "gaussian") return InitStrategy::gaussian;
    throw Error("unknown initialization strategy '" + name + "' (expected subtoken-mean or gaussian)");
}

struct ExtendOptions {
    InitStrategy strategy = InitStrategy::subtoken_mean;
    double stddev = 0.02;     ///< gaussian only
    std::uint64_t seed = 0;   ///< gaussian only
    std::size_t threads = 1;  ///< subtoken-mean only
};

/// Grows `old_embeddings` to the merged vocabulary of `outcome`.
///
/// Rows [0, |V_old|) are copied unchanged. A new row is either the mean of the
/// old rows of the token's encoding under `older` (subtoken-mean) or a draw
/// from normal(0, stddev) seeded by options.seed (gaussian).
inline EmbeddingMatrix extend_embeddings(const EmbeddingMatrix& old_embeddings, const Tokenizer& older,
                                         const MergeOutcome& outcome, const ExtendOptions& options = {}) {
    if (old_embeddings.rows() != older.vocab().size()) {
        throw Error("embedding matrix has " + std::to_string(old_embeddings.rows()) + " rows but the old vocabulary has " +
                    std::to_string(older.vocab().size()) + " tokens");
    }
    const std::size_t old_rows = old_embeddings.rows();
    const std::size_t new_rows = outcome.merged.vocab().size();
    const std::size_t dim = old_embeddings.dim();
    for (const auto& added : outcome.added_tokens) {
        if (added.id < old_rows || added.id >= new_rows) {
            throw Error("added token '" + added.text + "' has id " + std::to_string(added.id) +
                        " outside the appended range");
        }
    }
    if (outcome.added_tokens.size() != new_rows - old_rows) {
        throw Error("merge outcome does not come from this tokenizer: vocabulary sizes disagree");
    }

    std::vector<float> values(new_rows * dim);
    std::copy(old_embeddings.values().begin(), old_embeddings.values().end(), values.begin());
    EmbeddingMatrix result(new_rows, dim, std::move(values));

    switch (options.strategy) {
        case InitStrategy::subtoken_mean: {
            const auto& added = outcome.added_tokens;
            detail::parallel_for(added.size(), options.threads, [&](std::size_t i) {
                const auto ids = older.encode(outcome.merged.surface(added[i].id));
                std::vector<double> sum(dim, 0.0);
                for (const auto id : ids) {
                    const auto src = old_embeddings.row(id);
                    for (std::size_t k = 0; k < dim; ++k) sum[k] += src[k];
                }
                auto dst = result.row(added[i].id);
                for (std::size_t k = 0; k < dim; ++k) dst[k] = static_cast<float>(sum[k] / static_cast<double>(ids.size()));
            });
            break;
        }
        case InitStrategy::gaussian: {
            std::mt19937_64 rng(options.seed);
            std::normal_distribution<double> normal(0.0, options.stddev);
            for (std::size_t r = old_rows; r < new_rows; ++r) {
                for (auto& v : result.row(r)) v = static_cast<float>(normal(rng));
            }
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Binary format: "EMB1", u32 rows, u32 dim, rows*dim f32, all little-endian.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

}  // namespace detail

inline std::string serialize_embeddings(const EmbeddingMatrix& m) {
    if (m.rows() > UINT32_MAX || m.dim() > UINT32_MAX) throw Error("embedding matrix too large for EMB1");
    std::string out = "EMB1";
    out.reserve(12 + m.values().size() * 4);
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.dim()));
    for (float v : m.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

inline EmbeddingMatrix deserialize_embeddings(std::string_view data, const std::string& source = "<embeddings>") {
    if (data.size() < 12 || data.substr(0, 4) != "EMB1") throw ParseError(source, 1, "missing EMB1 header");
    const std::uint64_t rows = detail::get_u32(data, 4);
    const std::uint64_t dim = detail::get_u32(data, 8);
    const std::uint64_t expected = 12 + rows * dim * 4;
    if (data.size() != expected) {
        throw ParseError(source, 1, "expected " + std::to_string(expected) + " bytes for " + std::to_string(rows) +
                                        "x" + std::to_string(dim) + " matrix, found " + std::to_string(data.size()));
    }
    std::vector<float> values(rows * dim);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::bit_cast<float>(detail::get_u32(data, 12 + 4 * i));
    return EmbeddingMatrix(rows, dim, std::move(values));
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    const auto data = serialize_embeddings(m);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out.flush()) throw Error("failed writing " + path.string());
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_embeddings(ss.str(), path.string());
}

/// Text export for inspection: one row per line, space-separated values.
inline std::string embeddings_text(const EmbeddingMatrix& m) {
    std::ostringstream out;
    out << std::setprecision(9);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << row[k];
        out << "\n";
    }
    return out.str();
}

}  // namespace tokevolve
