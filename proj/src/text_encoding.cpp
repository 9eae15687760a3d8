// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/text_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "siamct/errors.hpp"
#include "siamct/geometry.hpp"

namespace siamct::text {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed)
{
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::uint64_t seed, std::size_t dimension)
    : seed_(seed), dimension_(dimension)
{
    if (dimension_ == 0) {
        throw ValidationError("embedding dimension must be positive");
    }
}

std::vector<double> HashEmbeddingProvider::lookup(std::string_view word) const
{
    std::mt19937_64 rng(fnv1a(word, seed_));
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(dimension_);
    double norm = 0.0;
    for (double& x : v) {
        x = dist(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) {
        x /= norm;
    }
    return v;
}

Word2VecProvider Word2VecProvider::load(const std::filesystem::path& path, std::size_t max_words)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(fmt::format("cannot open word vectors '{}'", path.string()));
    }
    std::size_t count = 0;
    Word2VecProvider p;
    if (!(in >> count >> p.dimension_) || p.dimension_ == 0) {
        throw FormatError(fmt::format("'{}': bad word2vec header", path.string()));
    }
    in.get();  // newline after header
    if (max_words != 0) {
        count = std::min(count, max_words);
    }
    p.table_.resize(count * p.dimension_);
    p.index_.reserve(count);
    std::vector<char> raw(p.dimension_ * sizeof(float));
    for (std::size_t i = 0; i < count; ++i) {
        std::string word;
        for (int ch = in.get(); ch != EOF; ch = in.get()) {
            if (ch == ' ') {
                break;
            }
            if (ch == '\n' && word.empty()) {
                continue;
            }
            word.push_back(static_cast<char>(ch));
        }
        if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
            throw FormatError(fmt::format("'{}': truncated at entry {}", path.string(), i));
        }
        std::memcpy(p.table_.data() + i * p.dimension_, raw.data(), raw.size());
        p.index_.emplace(std::move(word), i);
    }
    return p;
}

std::vector<double> Word2VecProvider::lookup(std::string_view word) const
{
    std::vector<double> v(dimension_, 0.0);
    auto it = index_.find(std::string(word));
    if (it != index_.end()) {
        const float* row = table_.data() + it->second * dimension_;
        for (std::size_t k = 0; k < dimension_; ++k) {
            v[k] = row[k];
        }
    }
    return v;
}

void write_word2vec_binary(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::vector<float>>>& words)
{
    const std::size_t dim = words.empty() ? 0 : words.front().second.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    out << words.size() << ' ' << dim << '\n';
    for (const auto& [w, vec] : words) {
        if (vec.size() != dim) {
            throw ValidationError("word vectors must share one dimension");
        }
        out << w << ' ';
        out.write(reinterpret_cast<const char*>(vec.data()), static_cast<std::streamsize>(dim * sizeof(float)));
        out << '\n';
    }
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec)
{
    if (spec == "hash" || spec.rfind("hash:", 0) == 0) {
        std::uint64_t seed = 0;
        std::size_t dim = kEmbeddingDim;
        if (spec.size() > 5) {
            const std::string rest = spec.substr(5);
            const auto colon = rest.find(':');
            seed = std::stoull(rest.substr(0, colon));
            if (colon != std::string::npos) {
                dim = std::stoull(rest.substr(colon + 1));
            }
        }
        return std::make_unique<HashEmbeddingProvider>(seed, dim);
    }
    return std::make_unique<Word2VecProvider>(Word2VecProvider::load(spec));
}

SentenceMatrix encode_sentence(std::string_view sentence, const EmbeddingProvider& provider, std::size_t length)
{
    const std::size_t dim = provider.dimension();
    SentenceMatrix m{Tensor({length, dim}), 0};
    const auto tokens = geometry::normalize_tokens(sentence);
    m.valid_length = std::min(tokens.size(), length);
    for (std::size_t i = 0; i < m.valid_length; ++i) {
        const auto v = provider.lookup(tokens[i]);
        std::copy(v.begin(), v.end(), m.values.data.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return m;
}

}  // namespace siamct::text
