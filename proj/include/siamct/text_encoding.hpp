// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "siamct/tensor.hpp"

namespace siamct::text {

inline constexpr std::size_t kSentenceLength = 20;
inline constexpr std::size_t kEmbeddingDim = 300;

/// Word -> vector lookup. Implementations are total: unknown words map to
/// some vector (zero for pretrained tables) rather than failing.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> lookup(std::string_view word) const = 0;
};

/// Deterministic stand-in for pretrained vectors: every token hashes to a
/// seeded unit-norm Gaussian vector.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::uint64_t seed = 0, std::size_t dimension = kEmbeddingDim);
    std::size_t dimension() const override { return dimension_; }
    std::vector<double> lookup(std::string_view word) const override;

private:
    std::uint64_t seed_;
    std::size_t dimension_;
};

/// Pretrained vectors in the binary word2vec layout: a text header
/// "<count> <dim>\n", then per word the word bytes, a space, `dim`
/// little-endian float32 values and an optional newline.
class Word2VecProvider final : public EmbeddingProvider {
public:
    /// `max_words` = 0 loads the whole table.
    static Word2VecProvider load(const std::filesystem::path& path, std::size_t max_words = 0);

    std::size_t dimension() const override { return dimension_; }
    std::vector<double> lookup(std::string_view word) const override;
    std::size_t vocabulary_size() const { return index_.size(); }

private:
    std::size_t dimension_ = 0;
    std::vector<float> table_;
    std::unordered_map<std::string, std::size_t> index_;
};

void write_word2vec_binary(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::vector<float>>>& words);

/// Provider from a config value: "hash" / "hash:<seed>" / "hash:<seed>:<dim>"
/// or a path to a binary word2vec file.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec);

/// Fixed-shape sentence embedding. Rows at or beyond `valid_length` are zero.
struct SentenceMatrix {
    Tensor values;  // {length, dim}
    std::size_t valid_length = 0;
};

/// Normalizes and tokenizes `sentence`, keeps the first `length` tokens and
/// zero-pads the rest.
SentenceMatrix encode_sentence(std::string_view sentence, const EmbeddingProvider& provider,
                               std::size_t length = kSentenceLength);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace siamct::text
