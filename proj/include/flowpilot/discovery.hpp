// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/backend.hpp"
#include "flowpilot/core.hpp"
#include "flowpilot/embedding.hpp"
#include "flowpilot/graph.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowpilot {

struct DiscoveryConfig
{
    double sample_ratio = 1.0 / 50.0;
    int candidate_k = 4;
    double merge_threshold = 0.92;
    std::uint64_t rng_seed = 0;
    /// Worker threads for per-episode condensation. Only used when the
    /// judge reports itself as safe for concurrent use.
    int workers = 1;

    /// Throws InvalidArgument on out-of-range fields.
    void validate() const;
};

/// Decides whether a recorded step moved to a new page.
class TransitionJudge
{
public:
    virtual ~TransitionJudge() = default;

    [[nodiscard]] virtual TransitionKind judge(Step const & step) const = 0;
    [[nodiscard]] virtual bool concurrent_safe() const noexcept { return false; }
};

/// PageJump iff the screen or the app changed.
class RuleJudge final : public TransitionJudge
{
public:
    [[nodiscard]] TransitionKind judge(Step const & step) const override;
    [[nodiscard]] bool concurrent_safe() const noexcept override { return true; }
};

/// Asks a generation backend; expects PAGE_JUMP or IN_PAGE in the answer.
class ModelJudge final : public TransitionJudge
{
public:
    explicit ModelJudge(GenerationBackend & backend)
    : backend_(backend)
    {}

    /// Throws ClassificationError (with the raw text) when the answer
    /// names neither or both verdicts.
    [[nodiscard]] TransitionKind judge(Step const & step) const override;

    [[nodiscard]] static std::string render_context(Step const & step);
    [[nodiscard]] static TransitionKind parse_verdict(std::string const & response);

private:
    GenerationBackend & backend_;
};

[[nodiscard]] TransitionKind classify_transition(TransitionJudge const & judge, Step const & step);

/// Stratified sample without replacement: each category present keeps
/// ceil(ratio * n_category) episodes. Output preserves input order;
/// deterministic for a given rng_seed.
[[nodiscard]] std::vector<Episode> sample_corpus(std::span<Episode const> episodes, DiscoveryConfig const & cfg);

struct CondensedTransition
{
    GuiState before_state;
    GuiState after_state;
    std::vector<Action> condensed_actions;
    std::string action_summary;
    /// Trailing run without a page jump.
    bool in_page_only = false;
    std::size_t first_step = 0;
};

inline constexpr std::string_view kInPagePrefix = "[in-page] ";

/// Folds runs of in-page steps into the next page jump. A trailing in-page
/// run becomes its own transition whose summary starts with "[in-page] ".
/// Summaries join the rendered actions with "; ".
[[nodiscard]] std::vector<CondensedTransition> condense_episode(TransitionJudge const & judge, Episode const & ep);

/// Dual-level node lookup: embedding top-k candidates (extended with
/// candidates tied at the k-th score), then structural comparison.
/// Returns the first candidate at or above the threshold with an equal
/// fingerprint, else the top candidate when it clears the threshold and
/// shares app and screen, else nullopt.
[[nodiscard]] std::optional<std::string> match_node(
    WorkflowGraph const & graph,
    VectorIndex const & index,
    GuiState const & state,
    DiscoveryConfig const & cfg,
    Embedder const & embedder);

[[nodiscard]] std::optional<std::string> match_node(
    WorkflowGraph const & graph,
    VectorIndex const & index,
    GuiState const & state,
    DiscoveryConfig const & cfg);

struct DiscoveryStats
{
    std::size_t episodes_in = 0;
    std::size_t episodes_sampled = 0;
    std::size_t transitions = 0;
    std::size_t merges = 0;
};

/// Incremental graph construction over the sampled corpus. Judge errors
/// are rethrown as ClassificationError prefixed with the episode id and
/// step index.
[[nodiscard]] WorkflowGraph build_graph(
    std::span<Episode const> episodes,
    TransitionJudge const & judge,
    DiscoveryConfig const & cfg,
    Embedder const & embedder,
    DiscoveryStats * stats = nullptr);

[[nodiscard]] WorkflowGraph build_graph(
    std::span<Episode const> episodes,
    TransitionJudge const & judge,
    DiscoveryConfig const & cfg,
    DiscoveryStats * stats = nullptr);

/// Builds the node index for an existing graph (keys are node ids).
[[nodiscard]] VectorIndex index_nodes(WorkflowGraph const & graph);

} // namespace flowpilot
