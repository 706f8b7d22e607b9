// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/oracle.hpp"

#include "flowpilot/errors.hpp"
#include "flowpilot/rng.hpp"

namespace flowpilot {

OracleBackend::OracleBackend(EnvHandle const & env, FaultConfig faults)
: env_(env)
, faults_(faults)
{
    if (!(faults_.per_step >= 0.0 && faults_.per_step <= 1.0)) {
        throw InvalidArgument("fault probability must be in [0, 1]");
    }
}

int OracleBackend::milestone_of(std::size_t cursor) const
{
    auto const & sc = env_.scenario();
    auto const n = sc.milestones.size();
    auto const len = sc.gold_path.size();
    if (n == 0 || len == 0) {
        return 0;
    }
    return static_cast<int>(std::min(cursor * n / len, n - 1));
}

Action OracleBackend::fault_action(GuiState const & state, Action const & gold, std::uint64_t pick)
{
    std::vector<Action> options;
    options.push_back(Action::tap("ghost_" + std::to_string(pick % 97)));
    for (auto const & e : state.elements) {
        if (!e.enabled) {
            options.push_back(Action::tap(e.element_id));
        }
        if (e.kind == ElementKind::TextField && !e.focused) {
            options.push_back(Action::type(e.element_id, "oops"));
        }
        if (e.kind == ElementKind::Button && e.enabled) {
            options.push_back(Action::type(e.element_id, "oops"));
        }
    }
    std::erase(options, gold);
    if (options.empty()) {
        return Action::tap("ghost_x");
    }
    return options[pick % options.size()];
}

std::string OracleBackend::complete(std::string const & prompt, std::string const & /*context*/)
{
    auto const role = role_of(prompt);
    if (!role) {
        throw BackendError("oracle: prompt names no role");
    }
    auto const & sc = env_.scenario();
    auto const c = cursor();

    switch (*role) {
    case Role::Planner: {
        std::string out;
        for (std::size_t i = 0; i < sc.milestones.size(); ++i) {
            out += std::to_string(i + 1) + ". " + sc.milestones[i] + "\n";
        }
        return out.empty() ? "1. " + sc.goal + "\n" : out;
    }
    case Role::Subgoal: {
        if (env_.terminated() || c >= sc.gold_path.size()) {
            return std::string(kTaskComplete);
        }
        auto const i = milestone_of(c);
        auto const & text = sc.milestones.empty() ? sc.goal : sc.milestones[static_cast<std::size_t>(i)];
        return std::to_string(i + 1) + ". " + text + " (next: " + render_action(sc.gold_path[c]) + ")";
    }
    case Role::Decision: {
        ++decision_calls_;
        if (c >= sc.gold_path.size()) {
            return std::string(to_string(ActionKind::Complete));
        }
        auto const & gold = sc.gold_path[c];
        if (attempts_[c]++ == 0 && faults_.per_step > 0.0) {
            Rng rng(faults_.seed ^ (0x9e3779b97f4a7c15ULL * (c + 1)), "fault/" + sc.scenario_id);
            if (rng.chance(faults_.per_step)) {
                ++injected_;
                return render_action(fault_action(env_.current(), gold, rng.next()));
            }
        }
        return render_action(gold);
    }
    case Role::Verifier: return "APPROVE";
    case Role::Narrator: return "";
    case Role::Judge: break;
    }
    throw BackendError("oracle: role '" + std::string(to_string(*role)) + "' is not served");
}

} // namespace flowpilot
