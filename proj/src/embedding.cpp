// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/embedding.hpp"

#include "flowpilot/core.hpp"
#include "flowpilot/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace flowpilot {

EmbeddingVector::EmbeddingVector(std::vector<double> values)
: values_(std::move(values))
{
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("embedding entries must be finite");
        }
    }
}

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values)
{
    EmbeddingVector v(std::move(values));
    double const n = v.norm();
    if (n > 0.0) {
        for (auto & x : v.values_) {
            x /= n;
        }
    }
    return v;
}

EmbeddingVector EmbeddingVector::zero(std::size_t dimension)
{
    return EmbeddingVector(std::vector<double>(dimension, 0.0));
}

double EmbeddingVector::norm() const noexcept
{
    double s = 0.0;
    for (double x : values_) {
        s += x * x;
    }
    return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

EmbeddingVector embed_text(std::string_view text, std::size_t dimension)
{
    if (dimension < 2) {
        throw InvalidArgument("embedding dimension must be >= 2");
    }
    std::vector<double> buckets(dimension, 0.0);
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            buckets[fnv1a64(token) % dimension] += 1.0;
            token.clear();
        }
    };
    for (char c : text) {
        auto const u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isalnum(u)) {
            token.push_back(static_cast<char>(std::tolower(u)));
        } else {
            flush();
        }
    }
    flush();
    return EmbeddingVector::normalized(std::move(buckets));
}

double cosine_sim(EmbeddingVector const & a, EmbeddingVector const & b)
{
    if (a.dimension() != b.dimension()) {
        throw InvalidArgument(
            "dimension mismatch: " + std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingVector Embedder::embed_one(std::string_view text) const
{
    std::string const one[] = {std::string(text)};
    auto out = embed(one);
    return std::move(out.at(0));
}

LocalEmbedder::LocalEmbedder(std::size_t dimension)
: dimension_(dimension)
{
    if (dimension < 2) {
        throw InvalidArgument("embedding dimension must be >= 2");
    }
}

std::vector<EmbeddingVector> LocalEmbedder::embed(std::span<std::string const> texts) const
{
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto const & t : texts) {
        out.push_back(embed_text(t, dimension_));
    }
    return out;
}

// ---------------------------------------------------------------------------

VectorIndex::VectorIndex(std::size_t dimension)
: dimension_(dimension)
{}

void VectorIndex::add(std::string key, EmbeddingVector vector)
{
    if (vector.dimension() != dimension_) {
        throw InvalidArgument(
            "index dimension " + std::to_string(dimension_) + ", got " + std::to_string(vector.dimension()));
    }
    if (slot_.count(key)) {
        throw InvalidArgument("duplicate index key '" + key + "'");
    }
    slot_.emplace(key, keys_.size());
    keys_.push_back(std::move(key));
    vectors_.push_back(std::move(vector));
}

std::vector<ScoredKey> VectorIndex::search_topk(EmbeddingVector const & query, std::size_t k) const
{
    if (k < 1) {
        throw InvalidArgument("k must be >= 1");
    }
    if (query.dimension() != dimension_) {
        throw InvalidArgument(
            "query dimension " + std::to_string(query.dimension()) + " does not match index dimension " +
            std::to_string(dimension_));
    }
    std::vector<ScoredKey> scored;
    scored.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        scored.push_back({keys_[i], cosine_sim(query, vectors_[i])});
    }
    auto const n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](ScoredKey const & a, ScoredKey const & b) {
                          if (a.score != b.score) {
                              return a.score > b.score;
                          }
                          return a.key < b.key;
                      });
    scored.resize(n);
    return scored;
}

bool VectorIndex::contains(std::string_view key) const
{
    return slot_.count(std::string(key)) != 0;
}

EmbeddingVector const & VectorIndex::vector(std::string_view key) const
{
    auto it = slot_.find(std::string(key));
    if (it == slot_.end()) {
        throw InvalidArgument("unknown index key '" + std::string(key) + "'");
    }
    return vectors_[it->second];
}

} // namespace flowpilot
