// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/core.hpp"
#include "flowpilot/discovery.hpp"
#include "flowpilot/embedding.hpp"
#include "flowpilot/graph.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowpilot {

/// (state) --[action summary]--> (state), with the graph nodes the two
/// states resolve to when they are present in the graph.
struct PathTriplet
{
    std::string src_summary;
    std::string action_summary;
    std::string dst_summary;
    std::optional<std::string> src_node;
    std::optional<std::string> dst_node;
};

struct TraceSummary
{
    std::string episode_id;
    std::string goal;
    std::string linearized_path;
    std::vector<PathTriplet> triplets;
    EmbeddingVector embedding;
};

/// Workflow graph plus indexed action traces. Immutable once built.
class KnowledgeBase
{
public:
    KnowledgeBase(WorkflowGraph graph, std::vector<TraceSummary> traces, std::shared_ptr<Embedder const> embedder);

    [[nodiscard]] WorkflowGraph const & graph() const noexcept { return graph_; }
    [[nodiscard]] std::vector<TraceSummary> const & traces() const noexcept { return traces_; }
    [[nodiscard]] VectorIndex const & index() const noexcept { return index_; }
    [[nodiscard]] Embedder const & embedder() const noexcept { return *embedder_; }
    [[nodiscard]] TraceSummary const * trace(std::string_view episode_id) const;

private:
    WorkflowGraph graph_;
    std::vector<TraceSummary> traces_;
    std::shared_ptr<Embedder const> embedder_;
    VectorIndex index_;
};

/// "<app>/<screen>", the label a state carries inside linearized paths.
[[nodiscard]] std::string state_summary(GuiState const & state);

/// Linearizes each episode's condensed path into newline-joined triplets
/// and embeds its goal. Throws InvalidArgument on duplicate episode ids.
[[nodiscard]] KnowledgeBase build_knowledge_base(
    WorkflowGraph graph,
    std::span<Episode const> episodes,
    std::shared_ptr<Embedder const> embedder = nullptr,
    TransitionJudge const & judge = RuleJudge{});

struct RetrievedTrace
{
    TraceSummary trace;
    double score = 0.0;
};

/// Exact arg-top-k of cosine(embed(query), trace embedding), descending,
/// ties by episode id. Throws InvalidArgument when k < 1.
[[nodiscard]] std::vector<RetrievedTrace> retrieve_traces(KnowledgeBase const & kb, std::string_view query, std::size_t k);

struct AugmentedContext
{
    std::string guideline_text;
    std::vector<std::string> source_episode_ids;
    std::vector<double> retrieved_scores;

    /// guideline_text, or the "no prior traces" sentinel when it is empty.
    [[nodiscard]] std::string prompt_text() const;
};

inline constexpr std::string_view kNoPriorTraces = "(no prior traces)";
inline constexpr int kMinContextBudget = 256;

/// One block per retrieved trace: header with goal and score (3 decimals),
/// the linearized path, then one-hop neighbour edges of the path's nodes
/// that the path does not already use. Whole trailing blocks are dropped to
/// stay within budget_chars. Throws InvalidArgument when budget < 256.
[[nodiscard]] AugmentedContext build_context(
    std::span<RetrievedTrace const> retrieved,
    WorkflowGraph const & graph,
    std::size_t budget_chars);

} // namespace flowpilot
