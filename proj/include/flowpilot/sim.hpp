// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic multi-app GUI simulator.
//
// Scenario file (JSON, "v": 1):
//   {"v":1, "scenario_id":..., "category":"Tool", "goal":..., "milestones":[...],
//    "start":{"app":..,"screen":..},
//    "apps":{"<app>":{"start_screen":..,
//                     "screens":{"<screen>":[Element, ...]},
//                     "transitions":[{"screen":..,"action":"TAP x",
//                                     ["when":{"<element>":"<label>"}],
//                                     ["to":"<screen>"],
//                                     ["set_label":{..}], ["reveal":[Element]], ["remove":[ids]],
//                                     ["enable":[ids]], ["disable":[ids]], ["focus":id]}]}},
//    "gold_path":["TAP x", ..., "COMPLETE"],
//    "goal_condition":{"app":..,"screen":..,"labels":{"<element>":"<label>"}}}
//
// Transition actions use the action grammar; a TYPE pattern whose text is
// "*" matches any text. Built-in behaviour when no transition matches:
// NAVIGATE <app> opens the app's start screen, HOME opens the "launcher"
// app when declared, BACK restores the previous screen, TAP on a text
// field focuses it, TYPE into the focused text field replaces its label.
// Anything else is a no-op step.

#include "flowpilot/core.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowpilot {

struct Mutation
{
    std::map<std::string, std::string> set_label;
    std::vector<UiElement> reveal;
    std::vector<std::string> remove;
    std::vector<std::string> enable;
    std::vector<std::string> disable;
    std::optional<std::string> focus;

    [[nodiscard]] bool empty() const noexcept;
};

struct ScreenTransition
{
    std::string screen;
    Action pattern;
    bool any_text = false;
    std::map<std::string, std::string> when;
    std::optional<std::string> to;
    Mutation mutation;
};

struct AppMachine
{
    std::string start_screen;
    std::map<std::string, std::vector<UiElement>> screens;
    std::vector<ScreenTransition> transitions;
};

struct GoalCondition
{
    std::string app;
    std::string screen;
    std::map<std::string, std::string> labels;

    [[nodiscard]] bool holds(GuiState const & state) const;
};

struct Scenario
{
    std::string scenario_id;
    Category category = Category::Tool;
    std::string goal;
    std::vector<std::string> milestones;
    std::string start_app;
    std::string start_screen;
    std::map<std::string, AppMachine> apps;
    std::vector<Action> gold_path;
    GoalCondition goal_condition;

    /// Fresh rendering of a declared screen. Throws InvalidArgument when the
    /// app or screen is unknown.
    [[nodiscard]] GuiState screen_state(std::string const & app, std::string const & screen) const;
};

/// Parses and checks a scenario, including a full gold-path replay.
/// Throws LoadError: JSON syntax errors name the line, schema errors the
/// field path, invariant violations the rule (e.g. "gold path invalid at
/// step 3: ...", "screen 'x' transition targets undeclared screen 'y'").
[[nodiscard]] Scenario parse_scenario(std::string_view text);
[[nodiscard]] Scenario load_scenario(std::filesystem::path const & path);

/// All *.json scenarios in a directory, ordered by file name.
[[nodiscard]] std::vector<Scenario> load_scenarios(std::filesystem::path const & dir);

/// One live episode against a scenario. Logs every step together with the
/// simulator's own page-jump flag.
class EnvHandle
{
public:
    explicit EnvHandle(std::shared_ptr<Scenario const> scenario);
    explicit EnvHandle(Scenario scenario);

    void reset();

    /// Executes an action. COMPLETE terminates the episode; any further
    /// action throws LifecycleError.
    Step apply(Action const & action);

    [[nodiscard]] GuiState const & current() const noexcept { return current_; }
    [[nodiscard]] Scenario const & scenario() const noexcept { return *scenario_; }
    [[nodiscard]] std::shared_ptr<Scenario const> scenario_ptr() const noexcept { return scenario_; }
    [[nodiscard]] bool terminated() const noexcept { return terminated_; }

    /// COMPLETE was executed while the goal condition held.
    [[nodiscard]] bool goal_reached() const noexcept { return goal_reached_; }

    [[nodiscard]] std::vector<Step> const & step_log() const noexcept { return steps_; }
    [[nodiscard]] std::vector<bool> const & scene_change_log() const noexcept { return jumps_; }

    /// True for steps whose action matched nothing (after == before).
    [[nodiscard]] std::vector<bool> const & noop_log() const noexcept { return noops_; }

private:
    struct Outcome
    {
        GuiState after;
        bool no_op = false;
        bool clear_back_stack = false;
        bool push_back_stack = false;
    };

    Outcome transition(Action const & action) const;

    std::shared_ptr<Scenario const> scenario_;
    GuiState current_;
    std::vector<GuiState> back_stack_;
    std::vector<Step> steps_;
    std::vector<bool> jumps_;
    std::vector<bool> noops_;
    bool terminated_ = false;
    bool goal_reached_ = false;
};

Step apply_action(EnvHandle & env, Action const & action);

struct ExportOptions
{
    /// Episodes per scenario; copy i uses detour seed (seed + i).
    int copies = 1;
    /// When set, benign detours (TAP to another screen, then BACK) are
    /// inserted from pristine screens with probability `detour_rate`.
    std::optional<std::uint64_t> detour_seed;
    double detour_rate = 0.35;
};

/// Replays gold paths into recorded episodes. Detour steps carry
/// gold = false. Page-jump flags are not exported.
[[nodiscard]] std::vector<Episode> export_episodes(std::span<Scenario const> scenarios, ExportOptions const & opts = {});

} // namespace flowpilot
