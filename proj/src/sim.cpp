// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/sim.hpp"

#include "flowpilot/errors.hpp"
#include "flowpilot/rng.hpp"
#include "flowpilot/serialize.hpp"

#include <algorithm>
#include <set>

namespace flowpilot {

namespace {

[[noreturn]] void fail(std::string const & path, std::string const & what)
{
    throw LoadError("scenario field '" + path + "': " + what);
}

json const & field(json const & obj, std::string const & path, char const * key)
{
    if (!obj.is_object() || !obj.contains(key)) {
        fail(path.empty() ? key : path + "." + key, "missing");
    }
    return obj.at(key);
}

std::string str(json const & obj, std::string const & path, char const * key)
{
    auto const & v = field(obj, path, key);
    if (!v.is_string()) {
        fail(path.empty() ? key : path + "." + key, "expected string");
    }
    return v.get<std::string>();
}

std::vector<std::string> str_list(json const & v, std::string const & path)
{
    if (!v.is_array()) {
        fail(path, "expected array of strings");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) {
            fail(path + "[" + std::to_string(i) + "]", "expected string");
        }
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::map<std::string, std::string> str_map(json const & v, std::string const & path)
{
    if (!v.is_object()) {
        fail(path, "expected object of strings");
    }
    std::map<std::string, std::string> out;
    for (auto it = v.begin(); it != v.end(); ++it) {
        if (!it.value().is_string()) {
            fail(path + "." + it.key(), "expected string");
        }
        out.emplace(it.key(), it.value().get<std::string>());
    }
    return out;
}

std::vector<UiElement> elements(json const & v, std::string const & path)
{
    if (!v.is_array()) {
        fail(path, "expected array of elements");
    }
    std::vector<UiElement> out;
    std::set<std::string> ids;
    int focused = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto p = path + "[" + std::to_string(i) + "]";
        try {
            out.push_back(v[i].get<UiElement>());
        } catch (json::exception const & ex) {
            fail(p, ex.what());
        }
        if (out.back().element_id.empty()) {
            fail(p + ".element_id", "empty");
        }
        if (!ids.insert(out.back().element_id).second) {
            fail(p + ".element_id", "duplicate id '" + out.back().element_id + "'");
        }
        focused += out.back().focused ? 1 : 0;
    }
    if (focused > 1) {
        fail(path, "more than one focused element");
    }
    return out;
}

Action action_pattern(json const & v, std::string const & path, bool allow_wildcard, bool * any_text)
{
    if (!v.is_string()) {
        fail(path, "expected action string");
    }
    auto parsed = parse_action(v.get<std::string>());
    if (!parsed) {
        fail(path, "malformed action '" + v.get<std::string>() + "'");
    }
    if (auto problems = validate_action(*parsed); !problems.empty()) {
        fail(path, problems.front());
    }
    if (any_text) {
        *any_text = allow_wildcard && parsed->kind == ActionKind::Type && parsed->text == "*";
    }
    return *parsed;
}

void apply_mutation(std::vector<UiElement> & elems, Mutation const & m)
{
    for (auto const & [id, label] : m.set_label) {
        for (auto & e : elems) {
            if (e.element_id == id) {
                e.label = label;
            }
        }
    }
    for (auto const & id : m.remove) {
        std::erase_if(elems, [&](UiElement const & e) { return e.element_id == id; });
    }
    for (auto const & r : m.reveal) {
        bool const present = std::any_of(elems.begin(), elems.end(), [&](auto const & e) { return e.element_id == r.element_id; });
        if (!present) {
            elems.push_back(r);
        }
    }
    for (auto & e : elems) {
        if (std::find(m.enable.begin(), m.enable.end(), e.element_id) != m.enable.end()) {
            e.enabled = true;
        }
        if (std::find(m.disable.begin(), m.disable.end(), e.element_id) != m.disable.end()) {
            e.enabled = false;
        }
    }
    if (m.focus) {
        for (auto & e : elems) {
            e.focused = e.element_id == *m.focus;
        }
    }
}

bool pattern_matches(ScreenTransition const & t, Action const & a, GuiState const & state)
{
    if (t.pattern.kind != a.kind || t.pattern.target != a.target || t.pattern.direction != a.direction) {
        return false;
    }
    if (a.kind == ActionKind::Type && !t.any_text && t.pattern.text != a.text) {
        return false;
    }
    if (a.target && (a.kind == ActionKind::Tap || a.kind == ActionKind::Type)) {
        auto const * el = state.find(*a.target);
        if (!el || !el->enabled) {
            return false;
        }
    }
    for (auto const & [id, label] : t.when) {
        auto const * el = state.find(id);
        if (!el || el->label != label) {
            return false;
        }
    }
    return true;
}

} // namespace

bool Mutation::empty() const noexcept
{
    return set_label.empty() && reveal.empty() && remove.empty() && enable.empty() && disable.empty() && !focus;
}

bool GoalCondition::holds(GuiState const & state) const
{
    if (state.app_id != app || state.screen_id != screen) {
        return false;
    }
    for (auto const & [id, label] : labels) {
        auto const * el = state.find(id);
        if (!el || el->label != label) {
            return false;
        }
    }
    return true;
}

GuiState Scenario::screen_state(std::string const & app, std::string const & screen) const
{
    auto a = apps.find(app);
    if (a == apps.end()) {
        throw InvalidArgument("unknown app '" + app + "'");
    }
    auto s = a->second.screens.find(screen);
    if (s == a->second.screens.end()) {
        throw InvalidArgument("unknown screen '" + app + "/" + screen + "'");
    }
    return make_state(app, screen, s->second);
}

Scenario parse_scenario(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (json::parse_error const & ex) {
        throw LoadError("scenario parse error at line " + std::to_string(line_of_offset(text, ex.byte)) + ": " + ex.what());
    }
    if (!doc.is_object() || doc.value("v", 0) != kSchemaVersion) {
        fail("v", "schema version 1 required");
    }

    Scenario sc;
    sc.scenario_id = str(doc, "", "scenario_id");
    auto cat = str(doc, "", "category");
    auto parsed_cat = parse_category(cat);
    if (!parsed_cat) {
        fail("category", "unknown category '" + cat + "'");
    }
    sc.category = *parsed_cat;
    sc.goal = str(doc, "", "goal");
    sc.milestones = str_list(field(doc, "", "milestones"), "milestones");
    if (sc.milestones.empty()) {
        fail("milestones", "at least one milestone required");
    }
    auto const & start = field(doc, "", "start");
    sc.start_app = str(start, "start", "app");
    sc.start_screen = str(start, "start", "screen");

    auto const & apps = field(doc, "", "apps");
    if (!apps.is_object() || apps.empty()) {
        fail("apps", "expected non-empty object");
    }
    for (auto it = apps.begin(); it != apps.end(); ++it) {
        auto const base = "apps." + it.key();
        auto const & app_json = it.value();
        AppMachine app;
        app.start_screen = str(app_json, base, "start_screen");
        auto const & screens = field(app_json, base, "screens");
        if (!screens.is_object() || screens.empty()) {
            fail(base + ".screens", "expected non-empty object");
        }
        for (auto s = screens.begin(); s != screens.end(); ++s) {
            app.screens.emplace(s.key(), elements(s.value(), base + ".screens." + s.key()));
        }
        if (!app.screens.count(app.start_screen)) {
            throw LoadError("app '" + it.key() + "' start_screen '" + app.start_screen + "' is not declared");
        }
        if (app_json.contains("transitions")) {
            auto const & ts = app_json.at("transitions");
            if (!ts.is_array()) {
                fail(base + ".transitions", "expected array");
            }
            for (std::size_t i = 0; i < ts.size(); ++i) {
                auto const p = base + ".transitions[" + std::to_string(i) + "]";
                auto const & tj = ts[i];
                ScreenTransition t;
                t.screen = str(tj, p, "screen");
                if (!app.screens.count(t.screen)) {
                    throw LoadError("transition " + p + " starts from undeclared screen '" + t.screen + "'");
                }
                t.pattern = action_pattern(field(tj, p, "action"), p + ".action", true, &t.any_text);
                if (tj.contains("when")) {
                    t.when = str_map(tj.at("when"), p + ".when");
                }
                if (tj.contains("to")) {
                    t.to = str(tj, p, "to");
                    if (!app.screens.count(*t.to)) {
                        throw LoadError(
                            "screen '" + t.screen + "' transition targets undeclared screen '" + *t.to + "' (" + p + ")");
                    }
                }
                if (tj.contains("set_label")) {
                    t.mutation.set_label = str_map(tj.at("set_label"), p + ".set_label");
                }
                if (tj.contains("reveal")) {
                    t.mutation.reveal = elements(tj.at("reveal"), p + ".reveal");
                }
                if (tj.contains("remove")) {
                    t.mutation.remove = str_list(tj.at("remove"), p + ".remove");
                }
                if (tj.contains("enable")) {
                    t.mutation.enable = str_list(tj.at("enable"), p + ".enable");
                }
                if (tj.contains("disable")) {
                    t.mutation.disable = str_list(tj.at("disable"), p + ".disable");
                }
                if (tj.contains("focus")) {
                    t.mutation.focus = str(tj, p, "focus");
                }
                if (!t.to && t.mutation.empty()) {
                    fail(p, "transition needs \"to\" or a mutation");
                }
                app.transitions.push_back(std::move(t));
            }
        }
        sc.apps.emplace(it.key(), std::move(app));
    }

    auto start_app = sc.apps.find(sc.start_app);
    if (start_app == sc.apps.end() || !start_app->second.screens.count(sc.start_screen)) {
        throw LoadError("start '" + sc.start_app + "/" + sc.start_screen + "' is not resolvable");
    }

    auto const & gold = field(doc, "", "gold_path");
    if (!gold.is_array() || gold.empty()) {
        fail("gold_path", "expected non-empty array");
    }
    for (std::size_t i = 0; i < gold.size(); ++i) {
        sc.gold_path.push_back(action_pattern(gold[i], "gold_path[" + std::to_string(i) + "]", false, nullptr));
    }

    auto const & goal = field(doc, "", "goal_condition");
    sc.goal_condition.app = str(goal, "goal_condition", "app");
    sc.goal_condition.screen = str(goal, "goal_condition", "screen");
    if (goal.contains("labels")) {
        sc.goal_condition.labels = str_map(goal.at("labels"), "goal_condition.labels");
    }

    // Gold replay: every action must have an effect, and the path must end
    // with a COMPLETE accepted in the goal state.
    EnvHandle env(sc);
    for (std::size_t k = 0; k < sc.gold_path.size(); ++k) {
        auto const & a = sc.gold_path[k];
        if (env.terminated()) {
            throw LoadError("gold path invalid at step " + std::to_string(k) + ": actions after COMPLETE");
        }
        env.apply(a);
        if (a.kind == ActionKind::Complete) {
            if (!env.goal_reached()) {
                throw LoadError(
                    "gold path invalid at step " + std::to_string(k) + ": COMPLETE outside the goal condition");
            }
        } else if (env.noop_log().back()) {
            throw LoadError(
                "gold path invalid at step " + std::to_string(k) + ": '" + render_action(a) + "' has no effect on " +
                env.current().app_id + "/" + env.current().screen_id);
        }
    }
    if (!env.terminated()) {
        throw LoadError("gold path invalid at step " + std::to_string(sc.gold_path.size()) + ": missing final COMPLETE");
    }
    return sc;
}

Scenario load_scenario(std::filesystem::path const & path)
{
    std::string text = read_file(path);
    try {
        return parse_scenario(text);
    } catch (LoadError const & ex) {
        throw LoadError(path.filename().string() + ": " + ex.what());
    }
}

std::vector<Scenario> load_scenarios(std::filesystem::path const & dir)
{
    std::vector<std::filesystem::path> files;
    for (auto const & entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Scenario> out;
    for (auto const & f : files) {
        out.push_back(load_scenario(f));
    }
    return out;
}

// ---------------------------------------------------------------------------

EnvHandle::EnvHandle(std::shared_ptr<Scenario const> scenario)
: scenario_(std::move(scenario))
{
    if (!scenario_) {
        throw InvalidArgument("null scenario");
    }
    reset();
}

EnvHandle::EnvHandle(Scenario scenario)
: EnvHandle(std::make_shared<Scenario const>(std::move(scenario)))
{}

void EnvHandle::reset()
{
    current_ = scenario_->screen_state(scenario_->start_app, scenario_->start_screen);
    back_stack_.clear();
    steps_.clear();
    jumps_.clear();
    noops_.clear();
    terminated_ = false;
    goal_reached_ = false;
}

EnvHandle::Outcome EnvHandle::transition(Action const & a) const
{
    auto const & sc = *scenario_;
    auto const & app = sc.apps.at(current_.app_id);

    switch (a.kind) {
    case ActionKind::Navigate:
        if (a.target && sc.apps.count(*a.target)) {
            auto const & dest = sc.apps.at(*a.target);
            return {sc.screen_state(*a.target, dest.start_screen), false, true, false};
        }
        return {current_, true};
    case ActionKind::Home:
        if (sc.apps.count("launcher")) {
            return {sc.screen_state("launcher", sc.apps.at("launcher").start_screen), false, true, false};
        }
        return {current_, true};
    case ActionKind::Back:
        if (!back_stack_.empty()) {
            return {back_stack_.back(), false, false, false};
        }
        return {current_, true};
    default:
        break;
    }

    for (auto const & t : app.transitions) {
        if (t.screen != current_.screen_id || !pattern_matches(t, a, current_)) {
            continue;
        }
        if (t.to) {
            auto elems = app.screens.at(*t.to);
            apply_mutation(elems, t.mutation);
            return {make_state(current_.app_id, *t.to, std::move(elems)), false, false, true};
        }
        auto elems = current_.elements;
        apply_mutation(elems, t.mutation);
        return {make_state(current_.app_id, current_.screen_id, std::move(elems)), false};
    }

    if (a.target && (a.kind == ActionKind::Tap || a.kind == ActionKind::Type)) {
        auto const * el = current_.find(*a.target);
        if (el && el->enabled && el->kind == ElementKind::TextField) {
            auto elems = current_.elements;
            if (a.kind == ActionKind::Tap && !el->focused) {
                for (auto & e : elems) {
                    e.focused = e.element_id == *a.target;
                }
                return {make_state(current_.app_id, current_.screen_id, std::move(elems)), false};
            }
            if (a.kind == ActionKind::Type && el->focused && a.text) {
                for (auto & e : elems) {
                    if (e.element_id == *a.target) {
                        e.label = *a.text;
                    }
                }
                return {make_state(current_.app_id, current_.screen_id, std::move(elems)), false};
            }
        }
    }
    return {current_, true};
}

Step EnvHandle::apply(Action const & a)
{
    if (terminated_) {
        throw LifecycleError("environment terminated; reset before applying '" + render_action(a) + "'");
    }
    Step step;
    step.before = current_;
    step.action = a;
    bool no_op = false;
    if (a.kind == ActionKind::Complete) {
        terminated_ = true;
        goal_reached_ = scenario_->goal_condition.holds(current_);
    } else {
        auto out = transition(a);
        no_op = out.no_op;
        if (!no_op) {
            if (out.clear_back_stack) {
                back_stack_.clear();
            } else if (out.push_back_stack) {
                back_stack_.push_back(current_);
            } else if (a.kind == ActionKind::Back) {
                back_stack_.pop_back();
            }
            current_ = std::move(out.after);
        }
    }
    step.after = current_;
    bool const jump = step.before.app_id != step.after.app_id || step.before.screen_id != step.after.screen_id;
    steps_.push_back(step);
    jumps_.push_back(jump);
    noops_.push_back(no_op);
    return step;
}

Step apply_action(EnvHandle & env, Action const & action)
{
    return env.apply(action);
}

// ---------------------------------------------------------------------------

std::vector<Episode> export_episodes(std::span<Scenario const> scenarios, ExportOptions const & opts)
{
    if (opts.copies < 1) {
        throw InvalidArgument("copies must be >= 1");
    }
    std::vector<Episode> out;
    for (auto const & sc : scenarios) {
        auto shared = std::make_shared<Scenario const>(sc);
        for (int copy = 0; copy < opts.copies; ++copy) {
            EnvHandle env(shared);
            std::optional<Rng> rng;
            if (opts.detour_seed) {
                rng.emplace(*opts.detour_seed + static_cast<std::uint64_t>(copy), sc.scenario_id);
            }
            Episode ep;
            ep.episode_id = opts.copies == 1 ? sc.scenario_id : sc.scenario_id + "#" + std::to_string(copy);
            ep.goal = sc.goal;
            ep.category = sc.category;

            for (auto const & gold : sc.gold_path) {
                if (rng && gold.kind != ActionKind::Complete) {
                    auto const & cur = env.current();
                    bool const pristine = cur.state_id == sc.screen_state(cur.app_id, cur.screen_id).state_id;
                    bool const roll = rng->chance(opts.detour_rate);
                    if (pristine && roll) {
                        std::vector<Action> options;
                        for (auto const & t : sc.apps.at(cur.app_id).transitions) {
                            if (t.screen == cur.screen_id && t.to && t.when.empty() && t.pattern.kind == ActionKind::Tap &&
                                pattern_matches(t, t.pattern, cur)) {
                                options.push_back(t.pattern);
                            }
                        }
                        if (!options.empty()) {
                            auto const & detour = options[rng->below(options.size())];
                            auto s1 = env.apply(detour);
                            s1.gold = false;
                            ep.steps.push_back(std::move(s1));
                            auto s2 = env.apply(Action::back());
                            s2.gold = false;
                            ep.steps.push_back(std::move(s2));
                        }
                    }
                }
                ep.steps.push_back(env.apply(gold));
            }
            out.push_back(std::move(ep));
        }
    }
    return out;
}

} // namespace flowpilot
