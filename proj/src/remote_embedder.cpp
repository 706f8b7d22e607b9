// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/remote_embedder.hpp"

#include "flowpilot/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace flowpilot {

std::string embeddings_request_body(std::span<std::string const> texts, std::string const & model)
{
    nlohmann::ordered_json body;
    body["input"] = nlohmann::ordered_json::array();
    for (auto const & t : texts) {
        body["input"].push_back(t);
    }
    body["model"] = model;
    return body.dump();
}

std::vector<EmbeddingVector> parse_embeddings_response(std::string const & body, std::size_t expected)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (nlohmann::json::parse_error const & ex) {
        throw ProtocolError(std::string("embeddings response is not JSON: ") + ex.what());
    }
    if (!doc.is_object() || !doc.contains("data") || !doc.at("data").is_array()) {
        throw ProtocolError("embeddings response lacks a \"data\" array");
    }
    auto const & data = doc.at("data");
    if (data.size() != expected) {
        throw ProtocolError(
            "embeddings response has " + std::to_string(data.size()) + " items for " + std::to_string(expected) +
            " inputs");
    }
    std::vector<std::optional<EmbeddingVector>> slots(expected);
    std::size_t dim = 0;
    for (auto const & item : data) {
        if (!item.is_object() || !item.contains("index") || !item.at("index").is_number_integer() ||
            !item.contains("embedding") || !item.at("embedding").is_array()) {
            throw ProtocolError("embeddings item needs integer \"index\" and array \"embedding\"");
        }
        auto const index = item.at("index").get<long long>();
        if (index < 0 || static_cast<std::size_t>(index) >= expected) {
            throw ProtocolError("embeddings index " + std::to_string(index) + " out of range");
        }
        if (slots[static_cast<std::size_t>(index)]) {
            throw ProtocolError("duplicate embeddings index " + std::to_string(index));
        }
        std::vector<double> values;
        for (auto const & x : item.at("embedding")) {
            if (!x.is_number() || !std::isfinite(x.get<double>())) {
                throw ProtocolError("embedding entries must be finite numbers");
            }
            values.push_back(x.get<double>());
        }
        if (values.empty()) {
            throw ProtocolError("empty embedding");
        }
        if (dim == 0) {
            dim = values.size();
        } else if (values.size() != dim) {
            throw ProtocolError("ragged embeddings in one response");
        }
        slots[static_cast<std::size_t>(index)] = EmbeddingVector::normalized(std::move(values));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(expected);
    for (auto & s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

std::vector<EmbeddingVector> remote_embed(
    EndpointConfig const & endpoint,
    std::span<std::string const> texts,
    SleepFn const & sleep)
{
    if (texts.empty()) {
        return {};
    }
    auto const response = post_json(endpoint, embeddings_request_body(texts, endpoint.model), sleep);
    return parse_embeddings_response(response, texts.size());
}

RemoteEmbedder::RemoteEmbedder(EndpointConfig endpoint, std::size_t dimension)
: endpoint_(std::move(endpoint))
, dimension_(dimension)
{
    if (dimension_ < 2) {
        throw InvalidArgument("embedding dimension must be >= 2");
    }
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<std::string const> texts) const
{
    auto out = remote_embed(endpoint_, texts);
    for (auto const & v : out) {
        if (v.dimension() != dimension_) {
            throw ProtocolError(
                "embedder declared dimension " + std::to_string(dimension_) + ", service returned " +
                std::to_string(v.dimension()));
        }
    }
    return out;
}

} // namespace flowpilot
