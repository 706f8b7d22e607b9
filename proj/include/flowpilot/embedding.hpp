// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flowpilot {

/// Fixed-dimension embedding. Entries are finite; the vector is either zero
/// or unit length (within 1e-6) when produced by an embedder.
class EmbeddingVector
{
public:
    EmbeddingVector() = default;

    /// Takes values as-is. Throws InvalidArgument on non-finite entries.
    explicit EmbeddingVector(std::vector<double> values);

    /// L2-normalizes; an all-zero input stays zero.
    [[nodiscard]] static EmbeddingVector normalized(std::vector<double> values);
    [[nodiscard]] static EmbeddingVector zero(std::size_t dimension);

    [[nodiscard]] std::size_t dimension() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<double const> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] double norm() const noexcept;
    [[nodiscard]] bool is_zero() const noexcept;

    friend bool operator==(EmbeddingVector const &, EmbeddingVector const &) = default;

private:
    std::vector<double> values_;
};

/// Deterministic local embedder: tokens are maximal ASCII-alphanumeric runs,
/// lowercased; each adds 1 to bucket fnv1a64(token) % dimension; the result
/// is L2-normalized. Blank text yields the zero vector.
/// Throws InvalidArgument when dimension < 2.
[[nodiscard]] EmbeddingVector embed_text(std::string_view text, std::size_t dimension = 64);

/// dot(a,b) / (|a||b|), or 0.0 when either vector is zero. Clamped to
/// [-1, 1]. Throws InvalidArgument on dimension mismatch.
[[nodiscard]] double cosine_sim(EmbeddingVector const & a, EmbeddingVector const & b);

/// Text-to-vector service. Implementations must be safe to call from
/// multiple threads once constructed.
class Embedder
{
public:
    virtual ~Embedder() = default;

    [[nodiscard]] virtual std::size_t dimension() const = 0;
    [[nodiscard]] virtual std::vector<EmbeddingVector> embed(std::span<std::string const> texts) const = 0;

    [[nodiscard]] EmbeddingVector embed_one(std::string_view text) const;
};

class LocalEmbedder final : public Embedder
{
public:
    explicit LocalEmbedder(std::size_t dimension = 64);

    [[nodiscard]] std::size_t dimension() const override { return dimension_; }
    [[nodiscard]] std::vector<EmbeddingVector> embed(std::span<std::string const> texts) const override;

private:
    std::size_t dimension_;
};

struct ScoredKey
{
    std::string key;
    double score = 0.0;

    friend bool operator==(ScoredKey const &, ScoredKey const &) = default;
};

/// Exact (flat) cosine index. Build with add(), then search concurrently;
/// add() is not synchronized against search().
class VectorIndex
{
public:
    explicit VectorIndex(std::size_t dimension);

    /// Throws InvalidArgument on dimension mismatch or duplicate key.
    void add(std::string key, EmbeddingVector vector);

    /// Top-k by cosine similarity, descending; ties by ascending key.
    /// Fewer than k results only when the index holds fewer entries.
    /// Throws InvalidArgument when k < 1 or dimensions differ.
    [[nodiscard]] std::vector<ScoredKey> search_topk(EmbeddingVector const & query, std::size_t k) const;

    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] std::size_t size() const noexcept { return keys_.size(); }
    [[nodiscard]] bool empty() const noexcept { return keys_.empty(); }
    [[nodiscard]] bool contains(std::string_view key) const;
    [[nodiscard]] EmbeddingVector const & vector(std::string_view key) const;
    [[nodiscard]] std::span<std::string const> keys() const noexcept { return keys_; }

private:
    std::size_t dimension_;
    std::vector<std::string> keys_;
    std::vector<EmbeddingVector> vectors_;
    std::unordered_map<std::string, std::size_t> slot_;
};

} // namespace flowpilot
