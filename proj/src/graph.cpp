// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/graph.hpp"

#include "flowpilot/errors.hpp"

#include <cstdio>
#include <set>

namespace flowpilot {

GraphNode const * WorkflowGraph::node(std::string_view node_id) const
{
    auto it = node_slot_.find(std::string(node_id));
    return it == node_slot_.end() ? nullptr : &nodes_[it->second];
}

std::string WorkflowGraph::add_node(GuiState state, EmbeddingVector embedding)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "n%06zu", nodes_.size());
    GraphNode n{buf, std::move(state), std::move(embedding), 1};
    add_node(std::move(n));
    return buf;
}

void WorkflowGraph::add_node(GraphNode node)
{
    if (node.node_id.empty()) {
        throw InvalidArgument("node id empty");
    }
    if (!node_slot_.emplace(node.node_id, nodes_.size()).second) {
        throw InvalidArgument("duplicate node id '" + node.node_id + "'");
    }
    nodes_.push_back(std::move(node));
}

void WorkflowGraph::record_visit(std::string_view node_id)
{
    auto it = node_slot_.find(std::string(node_id));
    if (it == node_slot_.end()) {
        throw InvalidArgument("unknown node '" + std::string(node_id) + "'");
    }
    ++nodes_[it->second].visit_count;
}

std::string WorkflowGraph::edge_key(std::string_view src, std::string_view dst, std::string_view summary)
{
    std::string k;
    k.reserve(src.size() + dst.size() + summary.size() + 2);
    k += src;
    k += '\x1f';
    k += dst;
    k += '\x1f';
    k += summary;
    return k;
}

bool WorkflowGraph::add_edge(std::string src, std::string dst, std::string action_summary, std::vector<Action> actions)
{
    if (!node(src) || !node(dst)) {
        throw InvalidArgument("edge endpoint missing: " + src + " -> " + dst);
    }
    auto key = edge_key(src, dst, action_summary);
    if (auto it = edge_slot_.find(key); it != edge_slot_.end()) {
        ++edges_[it->second].support_count;
        return false;
    }
    edge_slot_.emplace(std::move(key), edges_.size());
    edges_.push_back({std::move(src), std::move(dst), std::move(action_summary), std::move(actions), 1});
    return true;
}

void WorkflowGraph::add_edge(GraphEdge edge)
{
    auto key = edge_key(edge.src, edge.dst, edge.action_summary);
    if (!edge_slot_.emplace(std::move(key), edges_.size()).second) {
        throw InvalidArgument("duplicate edge " + edge.src + " -> " + edge.dst + " [" + edge.action_summary + "]");
    }
    edges_.push_back(std::move(edge));
}

std::vector<std::string> WorkflowGraph::check_invariants() const
{
    std::vector<std::string> out;
    std::set<std::string> ids;
    for (auto const & n : nodes_) {
        if (!ids.insert(n.node_id).second) {
            out.push_back("duplicate node id '" + n.node_id + "'");
        }
    }
    std::set<std::string> triples;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        auto const & e = edges_[i];
        if (!ids.count(e.src)) {
            out.push_back("edge " + std::to_string(i) + ": src '" + e.src + "' missing");
        }
        if (!ids.count(e.dst)) {
            out.push_back("edge " + std::to_string(i) + ": dst '" + e.dst + "' missing");
        }
        if (!triples.insert(edge_key(e.src, e.dst, e.action_summary)).second) {
            out.push_back("edge " + std::to_string(i) + ": duplicate triple");
        }
    }
    return out;
}

} // namespace flowpilot
