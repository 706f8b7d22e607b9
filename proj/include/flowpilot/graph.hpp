// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/core.hpp"
#include "flowpilot/embedding.hpp"

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flowpilot {

struct GraphNode
{
    std::string node_id;
    GuiState canonical_state;
    EmbeddingVector embedding;
    int visit_count = 1;

    friend bool operator==(GraphNode const &, GraphNode const &) = default;
};

struct GraphEdge
{
    std::string src;
    std::string dst;
    std::string action_summary;
    std::vector<Action> condensed_actions;
    int support_count = 1;

    friend bool operator==(GraphEdge const &, GraphEdge const &) = default;
};

/// Directed workflow graph. Nodes keep insertion order, which is also the
/// serialization order.
class WorkflowGraph
{
public:
    [[nodiscard]] std::vector<GraphNode> const & nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::vector<GraphEdge> const & edges() const noexcept { return edges_; }
    [[nodiscard]] GraphNode const * node(std::string_view node_id) const;
    [[nodiscard]] bool empty() const noexcept { return nodes_.empty(); }

    /// Appends a node with a fresh id ("n000000", "n000001", ...).
    std::string add_node(GuiState state, EmbeddingVector embedding);

    /// Appends a node under an explicit id (used by deserialization).
    void add_node(GraphNode node);

    void record_visit(std::string_view node_id);

    /// Inserts the edge, or bumps support_count when (src, dst,
    /// action_summary) already exists. Returns true on insertion.
    bool add_edge(std::string src, std::string dst, std::string action_summary, std::vector<Action> actions);

    /// Appends an edge verbatim (deserialization).
    void add_edge(GraphEdge edge);

    /// Invariant violations: dangling endpoints, duplicate triples,
    /// duplicate node ids.
    [[nodiscard]] std::vector<std::string> check_invariants() const;

    friend bool operator==(WorkflowGraph const & a, WorkflowGraph const & b)
    {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    static std::string edge_key(std::string_view src, std::string_view dst, std::string_view summary);

    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::unordered_map<std::string, std::size_t> node_slot_;
    std::unordered_map<std::string, std::size_t> edge_slot_;
};

} // namespace flowpilot
