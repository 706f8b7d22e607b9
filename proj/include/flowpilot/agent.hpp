// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/backend.hpp"
#include "flowpilot/core.hpp"
#include "flowpilot/rag.hpp"
#include "flowpilot/serialize.hpp"
#include "flowpilot/sim.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace flowpilot {

enum class Ablation { Full, ContextOnly, VerifierOnly };

/// "full", "context", "verifier".
[[nodiscard]] std::string_view to_string(Ablation mode) noexcept;
[[nodiscard]] std::optional<Ablation> parse_ablation(std::string_view name) noexcept;

struct GlobalPlan
{
    std::string goal;
    std::vector<std::string> strategy;
    std::string raw_text;
    /// No numbered milestones could be parsed; strategy holds the raw text.
    bool degraded = false;
};

struct SubGoal
{
    std::string description;
    int attempt = 0;
    int parent_milestone_index = 0;
    bool final_milestone = false;
};

struct Done
{};

using SubGoalOrDone = std::variant<SubGoal, Done>;

struct ObservedElement
{
    std::string element_id;
    ElementKind kind = ElementKind::Button;
    std::string label;
    bool enabled = true;
};

struct Observation
{
    std::string summary;
    std::vector<ObservedElement> actionable_elements;
};

enum class VerdictKind { Approve, Reject };

struct Verdict
{
    VerdictKind decision = VerdictKind::Approve;
    std::string feedback;

    [[nodiscard]] static Verdict approve() { return {}; }
    [[nodiscard]] static Verdict reject(std::string feedback);
    [[nodiscard]] bool approved() const noexcept { return decision == VerdictKind::Approve; }
};

struct HistoryEntry
{
    int step_index = 0;
    std::string narrative;
    Action action;
    std::string before_state_id;
    std::string after_state_id;
};

struct RunConfig
{
    int max_retries = 4;
    int max_steps = 40;
    int k_traces = 3;
    Ablation ablation = Ablation::Full;
    std::size_t context_budget = 4000;
    int loop_threshold = 3;
    /// Consult the backend's verifier role after the rule layer passes.
    bool use_backend_verifier = true;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Agent roles
// ---------------------------------------------------------------------------

/// Parses "N. text" / "N) text" lines. Falls back to a degraded
/// single-milestone plan.
[[nodiscard]] GlobalPlan global_plan(GenerationBackend & backend, std::string const & query, AugmentedContext const & ctx);
[[nodiscard]] GlobalPlan parse_plan(std::string const & goal, std::string const & response);

struct Refinement
{
    SubGoal previous;
    std::string feedback;
};

/// Done iff the response is the completion token. A refinement never
/// yields Done: the previous sub-goal is kept (attempt + 1) instead.
[[nodiscard]] SubGoalOrDone next_subgoal(
    GenerationBackend & backend,
    GlobalPlan const & plan,
    std::span<HistoryEntry const> history,
    std::optional<Refinement> const & refinement = std::nullopt);

[[nodiscard]] Observation observe(GuiState const & state);

/// Throws DecisionError (with both raw responses) when neither the first
/// answer nor the single reprompt contains a parseable action line.
[[nodiscard]] Action decide(GenerationBackend & backend, SubGoal const & subgoal, Observation const & obs);

/// Rule layer, then the backend verifier when one is given. A failing or
/// unparseable backend verifier counts as Approve and adds a warning.
[[nodiscard]] Verdict verify(
    GenerationBackend * backend,
    GuiState const & state,
    Action const & action,
    SubGoal const & subgoal,
    std::vector<std::string> * warnings = nullptr);

[[nodiscard]] Verdict verify_rules(GuiState const & state, Action const & action, SubGoal const & subgoal);

/// Never empty. Falls back to a template when the backend is absent,
/// fails or answers blank; newly revealed text is always carried.
[[nodiscard]] std::string narrate(
    GenerationBackend * backend,
    GuiState const & before,
    Action const & action,
    GuiState const & after,
    std::string const & goal,
    std::vector<std::string> * warnings = nullptr);

[[nodiscard]] std::string narrate_template(GuiState const & before, Action const & action, GuiState const & after);

/// Labels of elements that are new in `after` or whose label changed.
[[nodiscard]] std::vector<std::string> revealed_text(GuiState const & before, GuiState const & after);

// ---------------------------------------------------------------------------
// Episode loop
// ---------------------------------------------------------------------------

struct Proposal
{
    Action action;
    Verdict verdict;
};

struct StepRecord
{
    int step_index = 0;
    std::string subgoal;
    std::string observation;
    std::vector<Proposal> proposals;
    Action executed;
    std::string narrative;
    std::string before_state_id;
    std::string after_state_id;
};

struct EpisodeResult
{
    std::string scenario_id;
    std::string query;
    Ablation ablation = Ablation::Full;
    int steps_taken = 0;
    std::vector<Action> predicted_actions;
    bool success = false;
    std::vector<int> retry_counts;
    bool loop_flag = false;
    std::optional<std::string> cause;
    GlobalPlan plan;
    std::vector<std::string> retrieved;
    std::vector<HistoryEntry> history;
    std::vector<StepRecord> transcript;
    std::vector<std::string> warnings;
};

/// Runs the plan / sub-goal / decide / verify / execute / narrate loop
/// against a freshly reset environment. `kb` may be null (no retrieval).
[[nodiscard]] EpisodeResult run_episode(
    EnvHandle & env,
    GenerationBackend & backend,
    KnowledgeBase const * kb,
    std::string const & query,
    RunConfig const & cfg);

void to_json(json & j, Verdict const & v);
void to_json(json & j, HistoryEntry const & h);
void to_json(json & j, StepRecord const & r);
void to_json(json & j, EpisodeResult const & r);

} // namespace flowpilot
