// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/backend.hpp"
#include "flowpilot/sim.hpp"

#include <cstdint>
#include <map>
#include <optional>

namespace flowpilot {

struct FaultConfig
{
    /// Probability that the first decision at a gold step is a wrong action.
    double per_step = 0.0;
    std::uint64_t seed = 0;
};

/// Test backend that reads the gold path of the live environment's
/// scenario. The gold cursor is the number of executed steps, so the
/// oracle replays open-loop: once a wrong action executes it keeps
/// proposing later gold actions from the wrong state.
///
///   planner   -> the scenario's milestones, numbered
///   subgoal   -> "<i>. <milestone> (next: <gold action>)" or TASK_COMPLETE
///   decision  -> gold action; with faults, the first proposal per cursor
///                may be a rule-detectable wrong action
///   verifier  -> APPROVE
///   narrator  -> "" (callers fall back to their template)
///   judge     -> BackendError
class OracleBackend final : public GenerationBackend
{
public:
    explicit OracleBackend(EnvHandle const & env, FaultConfig faults = {});

    std::string complete(std::string const & role_prompt, std::string const & context) override;

    [[nodiscard]] int injected_faults() const noexcept { return injected_; }
    [[nodiscard]] int decision_calls() const noexcept { return decision_calls_; }

    /// A wrong action at `state` that differs from `gold` and that the
    /// verifier rule layer rejects: TAP on a missing or disabled element,
    /// or TYPE into an unfocused or non-text element.
    [[nodiscard]] static Action fault_action(GuiState const & state, Action const & gold, std::uint64_t pick);

private:
    [[nodiscard]] std::size_t cursor() const noexcept { return env_.step_log().size(); }
    [[nodiscard]] int milestone_of(std::size_t cursor) const;

    EnvHandle const & env_;
    FaultConfig faults_;
    std::map<std::size_t, int> attempts_;
    int injected_ = 0;
    int decision_calls_ = 0;
};

} // namespace flowpilot
