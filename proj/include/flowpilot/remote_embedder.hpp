// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/embedding.hpp"
#include "flowpilot/http.hpp"

#include <span>
#include <string>
#include <vector>

namespace flowpilot {

/// Request body for an embeddings call: {"input":[...],"model":"..."}.
[[nodiscard]] std::string embeddings_request_body(std::span<std::string const> texts, std::string const & model);

/// Parses {"data":[{"index":i,"embedding":[...]}]} into one normalized
/// vector per input, ordered by "index". Throws ProtocolError on a wrong
/// item count, missing/duplicate/out-of-range indices, non-numeric or
/// ragged embeddings.
[[nodiscard]] std::vector<EmbeddingVector> parse_embeddings_response(std::string const & body, std::size_t expected);

/// One round trip to an OpenAI-compatible embeddings endpoint. An empty
/// batch returns immediately without network traffic.
[[nodiscard]] std::vector<EmbeddingVector> remote_embed(
    EndpointConfig const & endpoint,
    std::span<std::string const> texts,
    SleepFn const & sleep = {});

class RemoteEmbedder final : public Embedder
{
public:
    RemoteEmbedder(EndpointConfig endpoint, std::size_t dimension);

    [[nodiscard]] std::size_t dimension() const override { return dimension_; }

    /// Throws ProtocolError if the service answers with another dimension.
    [[nodiscard]] std::vector<EmbeddingVector> embed(std::span<std::string const> texts) const override;

private:
    EndpointConfig endpoint_;
    std::size_t dimension_;
};

} // namespace flowpilot
