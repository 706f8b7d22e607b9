// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/agent.hpp"

#include "flowpilot/errors.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <utility>

namespace flowpilot {

namespace {

std::string location(GuiState const & s)
{
    return s.app_id + "/" + s.screen_id;
}

std::string render_plan(GlobalPlan const & plan)
{
    std::string out;
    for (std::size_t i = 0; i < plan.strategy.size(); ++i) {
        out += std::to_string(i + 1) + ". " + plan.strategy[i] + "\n";
    }
    return out;
}

std::string render_history(std::span<HistoryEntry const> history)
{
    if (history.empty()) {
        return "(none)\n";
    }
    std::string out;
    for (auto const & h : history) {
        out += std::to_string(h.step_index + 1) + ". " + h.narrative + "\n";
    }
    return out;
}

/// Leading "N." or "N)" of a sub-goal response, 0-based.
std::optional<int> leading_index(std::string const & text)
{
    static std::regex const re(R"(^\s*(\d{1,4})\s*[.)])");
    std::smatch m;
    if (!std::regex_search(text, m, re)) {
        return std::nullopt;
    }
    return std::stoi(m[1].str()) - 1;
}

int closest_milestone(GlobalPlan const & plan, std::string const & text)
{
    auto const q = embed_text(text);
    int best = 0;
    double best_score = -2.0;
    for (std::size_t i = 0; i < plan.strategy.size(); ++i) {
        auto const s = cosine_sim(q, embed_text(plan.strategy[i]));
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(i);
        }
    }
    return best;
}

SubGoal make_subgoal(GlobalPlan const & plan, std::string description, int attempt)
{
    SubGoal sg;
    auto const last = static_cast<int>(plan.strategy.size()) - 1;
    auto idx = leading_index(description).value_or(-1);
    if (idx < 0 || idx > last) {
        idx = closest_milestone(plan, description);
    }
    sg.description = std::move(description);
    sg.attempt = attempt;
    sg.parent_milestone_index = idx;
    sg.final_milestone = idx == last;
    return sg;
}

void warn(std::vector<std::string> * warnings, std::string msg)
{
    if (warnings) {
        warnings->push_back(std::move(msg));
    }
}

std::string describe_element(UiElement const & e)
{
    std::string out = "- " + std::string(to_string(e.kind)) + " " + e.element_id + " \"" + e.label + "\" ";
    out += e.enabled ? "enabled" : "disabled";
    if (e.focused) {
        out += " focused";
    }
    return out;
}

} // namespace

std::string_view to_string(Ablation mode) noexcept
{
    switch (mode) {
    case Ablation::Full: return "full";
    case Ablation::ContextOnly: return "context";
    case Ablation::VerifierOnly: return "verifier";
    }
    return "full";
}

std::optional<Ablation> parse_ablation(std::string_view name) noexcept
{
    for (auto m : {Ablation::Full, Ablation::ContextOnly, Ablation::VerifierOnly}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

Verdict Verdict::reject(std::string feedback)
{
    if (feedback.empty()) {
        feedback = "rejected without reason";
    }
    return {VerdictKind::Reject, std::move(feedback)};
}

void RunConfig::validate() const
{
    if (max_retries < 1) {
        throw InvalidArgument("max_retries must be >= 1");
    }
    if (max_steps < 1) {
        throw InvalidArgument("max_steps must be >= 1");
    }
    if (k_traces < 1) {
        throw InvalidArgument("k_traces must be >= 1");
    }
    if (loop_threshold < 2) {
        throw InvalidArgument("loop_threshold must be >= 2");
    }
    if (context_budget < static_cast<std::size_t>(kMinContextBudget)) {
        throw InvalidArgument("context_budget must be >= " + std::to_string(kMinContextBudget));
    }
}

// ---------------------------------------------------------------------------

GlobalPlan parse_plan(std::string const & goal, std::string const & response)
{
    static std::regex const line_re(R"(^\s*(\d+)[.)]\s+(.+?)\s*$)");
    GlobalPlan plan;
    plan.goal = goal;
    plan.raw_text = response;
    std::size_t pos = 0;
    while (pos <= response.size()) {
        auto end = response.find('\n', pos);
        if (end == std::string::npos) {
            end = response.size();
        }
        std::string const line = response.substr(pos, end - pos);
        std::smatch m;
        if (std::regex_match(line, m, line_re)) {
            plan.strategy.push_back(m[2].str());
        }
        pos = end + 1;
    }
    if (plan.strategy.empty()) {
        plan.degraded = true;
        auto text = trim(response);
        plan.strategy.push_back(text.empty() ? goal : text);
    }
    return plan;
}

GlobalPlan global_plan(GenerationBackend & backend, std::string const & query, AugmentedContext const & ctx)
{
    std::string context = "Goal: " + query + "\n\nGuidelines from similar tasks:\n" + ctx.prompt_text() + "\n";
    return parse_plan(query, backend.complete(role_prompt(Role::Planner), context));
}

SubGoalOrDone next_subgoal(
    GenerationBackend & backend,
    GlobalPlan const & plan,
    std::span<HistoryEntry const> history,
    std::optional<Refinement> const & refinement)
{
    if (plan.strategy.empty()) {
        throw InvalidArgument("plan has no milestones");
    }
    std::string context = "Goal: " + plan.goal + "\n\nPlan:\n" + render_plan(plan) + "\nHistory:\n" + render_history(history);
    if (refinement) {
        context += "\nPrevious sub-goal: " + refinement->previous.description + "\nVerifier feedback: " +
                   refinement->feedback + "\nRefine the sub-goal so the next action addresses the feedback.\n";
    }
    auto response = trim(backend.complete(role_prompt(Role::Subgoal), context));
    int const attempt = refinement ? refinement->previous.attempt + 1 : 0;

    if (response == kTaskComplete) {
        if (!refinement) {
            return Done{};
        }
        auto sg = refinement->previous;
        sg.attempt = attempt;
        return sg;
    }
    if (response.empty()) {
        if (refinement) {
            auto sg = refinement->previous;
            sg.attempt = attempt;
            return sg;
        }
        throw BackendError("sub-goal planner returned an empty response");
    }
    return make_subgoal(plan, std::move(response), attempt);
}

Observation observe(GuiState const & state)
{
    Observation obs;
    if (state.elements.empty()) {
        obs.summary = "empty screen";
        return obs;
    }
    std::vector<std::string> lines;
    lines.push_back("app: " + state.app_id + " | screen: " + state.screen_id);
    std::vector<std::string> text;
    for (auto const & e : state.elements) {
        if (!e.label.empty()) {
            text.push_back(e.label);
        }
    }
    if (!text.empty()) {
        lines.push_back("text: " + join(text, " | "));
    }
    for (auto const & e : state.elements) {
        lines.push_back(describe_element(e));
        if (is_interactive(e.kind)) {
            obs.actionable_elements.push_back({e.element_id, e.kind, e.label, e.enabled});
        }
    }
    obs.summary = join(lines, "\n");
    return obs;
}

Action decide(GenerationBackend & backend, SubGoal const & subgoal, Observation const & obs)
{
    std::string const context = "Sub-goal: " + subgoal.description + "\n\nObservation:\n" + obs.summary +
                                "\n\nAnswer with one action line: TAP <id> | TYPE <id> \"<text>\" | SCROLL up|down"
                                " | NAVIGATE <app> | BACK | HOME | COMPLETE\n";
    std::vector<std::string> raw;
    raw.push_back(backend.complete(role_prompt(Role::Decision), context));
    if (auto a = find_action(raw.back())) {
        return *a;
    }
    raw.push_back(backend.complete(
        role_prompt(Role::Decision),
        context + "\nYour previous answer contained no valid action line. Answer with exactly one action line.\n"));
    if (auto a = find_action(raw.back())) {
        return *a;
    }
    throw DecisionError("no parseable action after reprompt", std::move(raw));
}

Verdict verify_rules(GuiState const & state, Action const & action, SubGoal const & subgoal)
{
    if (auto problems = validate_action(action); !problems.empty()) {
        return Verdict::reject("malformed action: " + problems.front());
    }
    switch (action.kind) {
    case ActionKind::Tap: {
        auto const * e = state.find(*action.target);
        if (!e) {
            return Verdict::reject("target '" + *action.target + "' not found on screen");
        }
        if (!e->enabled) {
            return Verdict::reject("target '" + *action.target + "' is disabled");
        }
        return Verdict::approve();
    }
    case ActionKind::Type: {
        auto const * e = state.find(*action.target);
        if (!e) {
            return Verdict::reject("target '" + *action.target + "' not found on screen");
        }
        if (e->kind != ElementKind::TextField) {
            return Verdict::reject("Cannot type: '" + e->element_id + "' is not a text field");
        }
        if (!e->enabled) {
            return Verdict::reject("target '" + *action.target + "' is disabled");
        }
        if (!e->focused) {
            return Verdict::reject(
                "Cannot type: field '" + e->element_id + "' inactive, keyboard not visible; tap it first");
        }
        return Verdict::approve();
    }
    case ActionKind::Complete:
        if (!subgoal.final_milestone) {
            return Verdict::reject("cannot complete: the current sub-goal is not the final milestone");
        }
        return Verdict::approve();
    default: return Verdict::approve();
    }
}

Verdict verify(
    GenerationBackend * backend,
    GuiState const & state,
    Action const & action,
    SubGoal const & subgoal,
    std::vector<std::string> * warnings)
{
    auto verdict = verify_rules(state, action, subgoal);
    if (!verdict.approved() || !backend) {
        return verdict;
    }
    std::string const context = "Sub-goal: " + subgoal.description + "\n\nState:\n" + observe(state).summary +
                                "\n\nProposed action: " + render_action(action) +
                                "\n\nAnswer APPROVE, or REJECT: <constructive feedback>.\n";
    std::string response;
    try {
        response = trim(backend->complete(role_prompt(Role::Verifier), context));
    } catch (Error const & ex) {
        warn(warnings, std::string("verifier backend failed, approving by rules: ") + ex.what());
        return Verdict::approve();
    }
    auto const lowered = to_lower(response);
    if (lowered.starts_with("approve")) {
        return Verdict::approve();
    }
    if (lowered.starts_with("reject")) {
        auto feedback = response.substr(6);
        auto start = feedback.find_first_not_of(" :\t-");
        feedback = start == std::string::npos ? std::string{} : trim(feedback.substr(start));
        return Verdict::reject(feedback.empty() ? "rejected by verifier" : feedback);
    }
    warn(warnings, "unparseable verifier answer, approving by rules: '" + response + "'");
    return Verdict::approve();
}

std::vector<std::string> revealed_text(GuiState const & before, GuiState const & after)
{
    std::vector<std::string> out;
    for (auto const & e : after.elements) {
        if (e.label.empty()) {
            continue;
        }
        auto const * old = before.find(e.element_id);
        bool const same_screen = before.app_id == after.app_id && before.screen_id == after.screen_id;
        if (!old || !same_screen || old->label != e.label) {
            out.push_back(e.label);
        }
    }
    return out;
}

std::string narrate_template(GuiState const & before, Action const & action, GuiState const & after)
{
    std::string out = "Did " + render_action(action) + "; ";
    if (location(before) == location(after)) {
        out += "screen unchanged at " + location(after);
    } else {
        out += "screen changed " + location(before) + "\xE2\x86\x92" + location(after);
    }
    auto added = revealed_text(before, after);
    out += "; new text: ";
    out += added.empty() ? std::string("none") : join(added, ", ");
    return out;
}

std::string narrate(
    GenerationBackend * backend,
    GuiState const & before,
    Action const & action,
    GuiState const & after,
    std::string const & goal,
    std::vector<std::string> * warnings)
{
    auto const added = revealed_text(before, after);
    std::string narrative;
    if (backend) {
        std::vector<std::string> removed;
        std::vector<std::string> changed;
        for (auto const & e : before.elements) {
            auto const * now = after.find(e.element_id);
            if (!now) {
                removed.push_back(e.element_id);
            } else if (!(*now == e)) {
                changed.push_back(e.element_id);
            }
        }
        std::string context = "Goal: " + goal + "\nAction: " + render_action(action) + "\nBefore: " +
                              location(before) + "\nAfter: " + location(after) +
                              "\nAdded text: " + (added.empty() ? "none" : join(added, " | ")) +
                              "\nRemoved elements: " + (removed.empty() ? "none" : join(removed, ", ")) +
                              "\nChanged elements: " + (changed.empty() ? "none" : join(changed, ", ")) +
                              "\nDescribe what changed in one to three sentences, keeping any data the goal needs.\n";
        try {
            narrative = trim(backend->complete(role_prompt(Role::Narrator), context));
        } catch (Error const & ex) {
            warn(warnings, std::string("narrator failed, using template: ") + ex.what());
        }
    }
    if (narrative.empty()) {
        return narrate_template(before, action, after);
    }
    std::vector<std::string> missing;
    for (auto const & t : added) {
        if (narrative.find(t) == std::string::npos) {
            missing.push_back(t);
        }
    }
    if (!missing.empty()) {
        narrative += " New text: " + join(missing, ", ") + ".";
    }
    return narrative;
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(
    EnvHandle & env,
    GenerationBackend & backend,
    KnowledgeBase const * kb,
    std::string const & query,
    RunConfig const & cfg)
{
    cfg.validate();
    env.reset();

    EpisodeResult result;
    result.scenario_id = env.scenario().scenario_id;
    result.query = query;
    result.ablation = cfg.ablation;

    std::map<std::pair<std::string, std::string>, int> seen;
    try {
        // Lines 1-3: retrieve, build context, plan.
        AugmentedContext ctx;
        if (kb) {
            auto retrieved = retrieve_traces(*kb, query, static_cast<std::size_t>(cfg.k_traces));
            ctx = build_context(retrieved, kb->graph(), cfg.context_budget);
        }
        result.retrieved = ctx.source_episode_ids;
        result.plan = global_plan(backend, query, ctx);
        if (result.plan.degraded) {
            result.warnings.push_back("plan degraded to a single milestone");
        }

        for (int t = 0; t < cfg.max_steps; ++t) {
            auto next = next_subgoal(backend, result.plan, result.history);
            if (std::holds_alternative<Done>(next)) {
                break;
            }
            auto subgoal = std::get<SubGoal>(std::move(next));
            auto const obs = observe(env.current());

            StepRecord record;
            record.step_index = t;
            record.subgoal = subgoal.description;
            record.observation = obs.summary;

            Action action;
            for (int m = 0;;) {
                action = decide(backend, subgoal, obs);
                ++m;
                auto verdict = cfg.ablation == Ablation::ContextOnly
                                   ? Verdict::approve()
                                   : verify(cfg.use_backend_verifier ? &backend : nullptr, env.current(), action,
                                            subgoal, &result.warnings);
                record.proposals.push_back({action, verdict});
                if (verdict.approved()) {
                    break;
                }
                auto refined = next_subgoal(backend, result.plan, result.history, Refinement{subgoal, verdict.feedback});
                subgoal = std::get<SubGoal>(std::move(refined));
                if (m >= cfg.max_retries) {
                    break;
                }
            }

            auto const step = env.apply(action);
            std::string narrative = cfg.ablation == Ablation::VerifierOnly
                                        ? render_action(action)
                                        : narrate(&backend, step.before, action, step.after, query, &result.warnings);

            record.executed = action;
            record.narrative = narrative;
            record.before_state_id = step.before.state_id;
            record.after_state_id = step.after.state_id;

            result.history.push_back({t, narrative, action, step.before.state_id, step.after.state_id});
            result.predicted_actions.push_back(action);
            result.retry_counts.push_back(static_cast<int>(record.proposals.size()) - 1);
            result.transcript.push_back(std::move(record));
            result.steps_taken = t + 1;

            if (++seen[{step.before.state_id, render_action(action)}] >= cfg.loop_threshold) {
                result.loop_flag = true;
            }
            if (env.terminated()) {
                break;
            }
        }
        if (!env.terminated() && result.steps_taken == cfg.max_steps) {
            result.cause = "step budget exhausted";
        }
    } catch (Error const & ex) {
        result.cause = ex.what();
    }
    result.success = env.goal_reached();
    return result;
}

// ---------------------------------------------------------------------------

void to_json(json & j, Verdict const & v)
{
    j = json{{"decision", v.approved() ? "approve" : "reject"}, {"feedback", v.feedback}};
}

void to_json(json & j, HistoryEntry const & h)
{
    j = json{
        {"step_index", h.step_index},
        {"narrative", h.narrative},
        {"action", render_action(h.action)},
        {"before_state_id", h.before_state_id},
        {"after_state_id", h.after_state_id},
    };
}

void to_json(json & j, StepRecord const & r)
{
    json proposals = json::array();
    for (auto const & p : r.proposals) {
        proposals.push_back({{"action", render_action(p.action)}, {"verdict", p.verdict}});
    }
    j = json{
        {"step_index", r.step_index},
        {"subgoal", r.subgoal},
        {"observation", r.observation},
        {"proposals", std::move(proposals)},
        {"executed", render_action(r.executed)},
        {"narrative", r.narrative},
        {"before_state_id", r.before_state_id},
        {"after_state_id", r.after_state_id},
    };
}

void to_json(json & j, EpisodeResult const & r)
{
    json predicted = json::array();
    for (auto const & a : r.predicted_actions) {
        predicted.push_back(render_action(a));
    }
    j = json{
        {"v", kSchemaVersion},
        {"scenario_id", r.scenario_id},
        {"query", r.query},
        {"ablation", to_string(r.ablation)},
        {"steps_taken", r.steps_taken},
        {"predicted_actions", std::move(predicted)},
        {"success", r.success},
        {"retry_counts", r.retry_counts},
        {"loop_flag", r.loop_flag},
        {"cause", r.cause ? json(*r.cause) : json(nullptr)},
        {"plan", {{"strategy", r.plan.strategy}, {"degraded", r.plan.degraded}}},
        {"retrieved", r.retrieved},
        {"history", r.history},
        {"transcript", r.transcript},
        {"warnings", r.warnings},
    };
}

} // namespace flowpilot
