// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/agent.hpp"
#include "flowpilot/errors.hpp"
#include "flowpilot/oracle.hpp"

#include "support/testing.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

namespace flowpilot {
namespace {

using testing::fixture;

class FnBackend final : public GenerationBackend
{
public:
    using Fn = std::function<std::string(Role, std::string const &)>;
    explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}

    std::string complete(std::string const & prompt, std::string const & context) override
    {
        auto role = role_of(prompt);
        if (!role) {
            throw BackendError("no role");
        }
        calls.emplace_back(*role, context);
        return fn_(*role, context);
    }

    [[nodiscard]] int count(Role r) const
    {
        return static_cast<int>(std::count_if(calls.begin(), calls.end(), [r](auto const & c) { return c.first == r; }));
    }

    std::vector<std::pair<Role, std::string>> calls;

private:
    Fn fn_;
};

GlobalPlan two_step_plan()
{
    return parse_plan("Send the code", "1. Find the code in Notes\n2. Send it via Messages\n");
}

TEST(Plan, ParsesNumberedLines)
{
    auto p = parse_plan("g", "Here is the plan:\n1. Open app\n  2) Tap the button  \nnote\n3. Finish");
    EXPECT_FALSE(p.degraded);
    EXPECT_EQ(p.strategy, (std::vector<std::string>{"Open app", "Tap the button", "Finish"}));
}

TEST(Plan, DegradesWithoutMilestones)
{
    auto p = parse_plan("goal text", "just do it");
    EXPECT_TRUE(p.degraded);
    EXPECT_EQ(p.strategy, std::vector<std::string>{"just do it"});
    EXPECT_EQ(parse_plan("goal text", "  ").strategy, std::vector<std::string>{"goal text"});
}

TEST(Plan, PlannerSeesGuidelines)
{
    FnBackend b([](Role, std::string const &) { return "1. a"; });
    (void)global_plan(b, "q", AugmentedContext{});
    ASSERT_EQ(b.calls.size(), 1u);
    EXPECT_EQ(b.calls[0].first, Role::Planner);
    EXPECT_NE(b.calls[0].second.find("(no prior traces)"), std::string::npos);
}

TEST(SubGoalTest, CompletionTokenMeansDone)
{
    FnBackend b([](Role, std::string const &) { return "  TASK_COMPLETE\n"; });
    EXPECT_TRUE(std::holds_alternative<Done>(next_subgoal(b, two_step_plan(), {})));
}

TEST(SubGoalTest, MilestoneIndexFromPrefixOrSimilarity)
{
    FnBackend b([](Role, std::string const & ctx) {
        return ctx.find("History:\n(none)") != std::string::npos ? "2. Send it" : "Find the code in Notes now";
    });
    auto plan = two_step_plan();
    auto sg = std::get<SubGoal>(next_subgoal(b, plan, {}));
    EXPECT_EQ(sg.parent_milestone_index, 1);
    EXPECT_TRUE(sg.final_milestone);
    EXPECT_EQ(sg.attempt, 0);

    std::vector<HistoryEntry> h = {{0, "opened notes", Action::navigate("notes"), "a", "b"}};
    sg = std::get<SubGoal>(next_subgoal(b, plan, h));
    EXPECT_EQ(sg.parent_milestone_index, 0);
    EXPECT_FALSE(sg.final_milestone);
}

TEST(SubGoalTest, RefinementCarriesFeedbackAndNeverFinishes)
{
    std::string const feedback = "Cannot type: field 'body_field' inactive, keyboard not visible; tap it first";
    FnBackend b([](Role, std::string const & ctx) {
        return ctx.find("tap it first") != std::string::npos ? "2. Tap body_field, then type" : "TASK_COMPLETE";
    });
    SubGoal prev{"2. Type the code", 1, 1, true};
    auto sg = std::get<SubGoal>(next_subgoal(b, two_step_plan(), {}, Refinement{prev, feedback}));
    EXPECT_EQ(sg.description, "2. Tap body_field, then type");
    EXPECT_EQ(sg.attempt, 2);
    EXPECT_NE(b.calls.back().second.find("Previous sub-goal: 2. Type the code"), std::string::npos);

    FnBackend done([](Role, std::string const &) { return "TASK_COMPLETE"; });
    auto kept = std::get<SubGoal>(next_subgoal(done, two_step_plan(), {}, Refinement{prev, "x"}));
    EXPECT_EQ(kept.description, prev.description);
    EXPECT_EQ(kept.attempt, 2);
}

TEST(ObserveTest, EmptyScreen)
{
    auto obs = observe(make_state("a", "s", {}));
    EXPECT_EQ(obs.summary, "empty screen");
    EXPECT_TRUE(obs.actionable_elements.empty());
}

TEST(ObserveTest, DisabledButtonIsListedAndMarked)
{
    auto s = make_state("shop", "cart", {{"title", ElementKind::Label, "Cart"}, {"pay", ElementKind::Button, "Pay", false}});
    auto obs = observe(s);
    EXPECT_NE(obs.summary.find("- button pay \"Pay\" disabled"), std::string::npos) << obs.summary;
    ASSERT_EQ(obs.actionable_elements.size(), 1u);
    EXPECT_EQ(obs.actionable_elements[0].element_id, "pay");
    EXPECT_FALSE(obs.actionable_elements[0].enabled);
}

TEST(ObserveTest, RandomStatesListEveryInteractiveElement)
{
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        auto s = testing::random_state(rng, 8);
        auto obs = observe(s);
        std::size_t interactive = 0;
        for (auto const & e : s.elements) {
            if (is_interactive(e.kind)) {
                ++interactive;
            }
            EXPECT_NE(obs.summary.find(" " + e.element_id + " "), std::string::npos) << obs.summary;
            if (!e.label.empty()) {
                EXPECT_NE(obs.summary.find(e.label), std::string::npos);
            }
        }
        EXPECT_EQ(obs.actionable_elements.size(), interactive);
        EXPECT_FALSE(obs.summary.empty());
    }
}

TEST(DecideTest, ParsesActionAmongProse)
{
    FnBackend b([](Role, std::string const &) { return "I will tap it.\nTAP go_btn\n"; });
    EXPECT_EQ(decide(b, SubGoal{"1. go"}, Observation{"x", {}}), Action::tap("go_btn"));
    EXPECT_TRUE(b.calls[0].second.starts_with("Sub-goal: 1. go\n\nObservation:\nx"));
}

TEST(DecideTest, RepromptsOnceThenThrows)
{
    int n = 0;
    FnBackend once([&n](Role, std::string const &) { return n++ == 0 ? std::string("hmm") : std::string("BACK"); });
    EXPECT_EQ(decide(once, SubGoal{"g"}, Observation{}), Action::back());
    EXPECT_EQ(once.calls.size(), 2u);

    FnBackend never([](Role, std::string const &) { return "no idea"; });
    try {
        (void)decide(never, SubGoal{"g"}, Observation{});
        FAIL() << "expected DecisionError";
    } catch (DecisionError const & ex) {
        EXPECT_EQ(ex.raw_responses(), (std::vector<std::string>{"no idea", "no idea"}));
    }
    EXPECT_EQ(never.calls.size(), 2u);
}

TEST(VerifyTest, RuleLayer)
{
    auto s = make_state("m", "compose", {{"body", ElementKind::TextField, "", true, false},
                                         {"send", ElementKind::Button, "Send"},
                                         {"off", ElementKind::Button, "Off", false}});
    SubGoal mid{"1. x", 0, 0, false};
    SubGoal last{"2. y", 0, 1, true};
    EXPECT_EQ(verify_rules(s, Action::tap("ghost"), mid).feedback, "target 'ghost' not found on screen");
    EXPECT_EQ(verify_rules(s, Action::tap("off"), mid).feedback, "target 'off' is disabled");
    EXPECT_EQ(verify_rules(s, Action::type("body", "hi"), mid).feedback,
              "Cannot type: field 'body' inactive, keyboard not visible; tap it first");
    EXPECT_EQ(verify_rules(s, Action::type("send", "hi"), mid).feedback, "Cannot type: 'send' is not a text field");
    EXPECT_FALSE(verify_rules(s, Action::complete(), mid).approved());
    EXPECT_TRUE(verify_rules(s, Action::complete(), last).approved());
    EXPECT_TRUE(verify_rules(s, Action::tap("send"), mid).approved());
    EXPECT_TRUE(verify_rules(s, Action::back(), mid).approved());
    s.elements[0].focused = true;
    EXPECT_TRUE(verify_rules(s, Action::type("body", "hi"), mid).approved());
}

TEST(VerifyTest, BackendVerdicts)
{
    auto s = make_state("m", "c", {{"send", ElementKind::Button, "Send"}});
    SubGoal sg{"1. x"};
    FnBackend rej([](Role, std::string const &) { return "REJECT: wrong screen, go back"; });
    auto v = verify(&rej, s, Action::tap("send"), sg);
    EXPECT_FALSE(v.approved());
    EXPECT_EQ(v.feedback, "wrong screen, go back");

    std::vector<std::string> warnings;
    FnBackend junk([](Role, std::string const &) { return "maybe?"; });
    EXPECT_TRUE(verify(&junk, s, Action::tap("send"), sg, &warnings).approved());
    EXPECT_EQ(warnings.size(), 1u);

    FnBackend boom([](Role, std::string const &) -> std::string { throw TransportError("down", 3); });
    EXPECT_TRUE(verify(&boom, s, Action::tap("send"), sg, &warnings).approved());
    EXPECT_EQ(warnings.size(), 2u);

    // Rule rejections never reach the backend.
    EXPECT_FALSE(verify(&junk, s, Action::tap("ghost"), sg).approved());
    EXPECT_EQ(junk.calls.size(), 1u);
}

TEST(NarrateTest, TemplateCases)
{
    auto a = make_state("music", "song", {{"lyrics_btn", ElementKind::Button, "Lyrics"}});
    EXPECT_EQ(narrate(nullptr, a, Action::tap("x"), a, "g"),
              "Did TAP x; screen unchanged at music/song; new text: none");
    auto b = make_state("messages", "inbox", {{"t", ElementKind::Label, "Inbox"}});
    auto n = narrate(nullptr, a, Action::navigate("messages"), b, "g");
    EXPECT_NE(n.find("music/song"), std::string::npos);
    EXPECT_NE(n.find("messages/inbox"), std::string::npos);
}

TEST(NarrateTest, RevealedTextAlwaysCarried)
{
    auto before = make_state("music", "lyrics", {{"l1", ElementKind::Label, "verse"}});
    auto after = make_state("music", "lyrics", {{"l1", ElementKind::Label, "verse"}, {"l2", ElementKind::Label, "lyrics: la la la"}});
    EXPECT_EQ(revealed_text(before, after), std::vector<std::string>{"lyrics: la la la"});

    FnBackend terse([](Role, std::string const &) { return "Scrolled down."; });
    auto n = narrate(&terse, before, Action::scroll(ScrollDirection::Down), after, "g");
    EXPECT_EQ(n, "Scrolled down. New text: lyrics: la la la.");

    FnBackend blank([](Role, std::string const &) { return " "; });
    n = narrate(&blank, before, Action::scroll(ScrollDirection::Down), after, "g");
    EXPECT_NE(n.find("la la la"), std::string::npos);

    std::vector<std::string> warnings;
    FnBackend boom([](Role, std::string const &) -> std::string { throw BackendError("x"); });
    n = narrate(&boom, before, Action::scroll(ScrollDirection::Down), after, "g", &warnings);
    EXPECT_NE(n.find("la la la"), std::string::npos);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(RunConfigTest, Validates)
{
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    c.max_retries = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.context_budget = 10;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

// ---------------------------------------------------------------------------

TEST(RunEpisode, OracleSolvesEveryFixture)
{
    for (auto const & sc : testing::all_fixtures()) {
        for (auto mode : {Ablation::Full, Ablation::ContextOnly, Ablation::VerifierOnly}) {
            EnvHandle env(sc);
            OracleBackend oracle(env);
            RunConfig cfg;
            cfg.ablation = mode;
            auto r = run_episode(env, oracle, nullptr, sc.goal, cfg);
            EXPECT_TRUE(r.success) << sc.scenario_id << " " << to_string(mode) << " " << r.cause.value_or("");
            EXPECT_EQ(r.predicted_actions, sc.gold_path) << sc.scenario_id;
            EXPECT_FALSE(r.loop_flag);
            EXPECT_FALSE(r.cause.has_value());
        }
    }
}

TEST(RunEpisode, VerifierRecoversInjectedFaults)
{
    for (auto const & sc : testing::all_fixtures()) {
        EnvHandle env(sc);
        OracleBackend oracle(env, {1.0, 5});
        auto r = run_episode(env, oracle, nullptr, sc.goal, {});
        EXPECT_TRUE(r.success) << sc.scenario_id;
        EXPECT_EQ(r.predicted_actions, sc.gold_path);
        EXPECT_EQ(oracle.injected_faults(), static_cast<int>(sc.gold_path.size()));
        for (auto n : r.retry_counts) {
            EXPECT_EQ(n, 1);
        }

        EnvHandle env2(sc);
        OracleBackend oracle2(env2, {1.0, 5});
        RunConfig cfg;
        cfg.ablation = Ablation::ContextOnly;
        auto r2 = run_episode(env2, oracle2, nullptr, sc.goal, cfg);
        EXPECT_FALSE(r2.success) << sc.scenario_id;
    }
}

TEST(RunEpisode, DeterministicGivenSeed)
{
    auto sc = fixture("shop-checkout");
    auto run = [&sc] {
        EnvHandle env(sc);
        OracleBackend oracle(env, {0.5, 11});
        RunConfig cfg;
        cfg.ablation = Ablation::ContextOnly;
        json j = run_episode(env, oracle, nullptr, sc.goal, cfg);
        return j.dump();
    };
    EXPECT_EQ(run(), run());
}

TEST(RunEpisode, RetryBoundHoldsUnderRandomBackend)
{
    Rng rng(2024);
    auto scs = testing::all_fixtures();
    int steps = 0;
    int episodes = 0;
    while (steps < 2000) {
        auto const & sc = scs[rng.below(scs.size())];
        EnvHandle env(sc);
        std::vector<std::string> ids = {"ghost"};
        for (auto const & [_, app] : sc.apps) {
            for (auto const & [__, elems] : app.screens) {
                for (auto const & e : elems) {
                    ids.push_back(e.element_id);
                }
            }
        }
        FnBackend b([&rng, &ids](Role role, std::string const &) -> std::string {
            switch (role) {
            case Role::Planner: return "1. a\n2. b";
            case Role::Subgoal: return rng.chance(0.05) ? "TASK_COMPLETE" : (rng.chance(0.5) ? "1. a" : "2. b");
            case Role::Decision: {
                auto const & id = ids[rng.below(ids.size())];
                switch (rng.below(5)) {
                case 0: return "TAP " + id;
                case 1: return "TYPE " + id + " \"x\"";
                case 2: return "BACK";
                case 3: return rng.chance(0.2) ? "COMPLETE" : "SCROLL down";
                default: return "gibberish";
                }
            }
            case Role::Verifier: return rng.chance(0.3) ? "REJECT: try again" : "APPROVE";
            default: return "";
            }
        });
        RunConfig cfg;
        cfg.max_steps = 30;
        cfg.max_retries = 1 + static_cast<int>(rng.below(4));
        auto r = run_episode(env, b, nullptr, sc.goal, cfg);
        ++episodes;
        steps += r.steps_taken;
        ASSERT_LE(r.steps_taken, cfg.max_steps);
        ASSERT_EQ(r.transcript.size(), static_cast<std::size_t>(r.steps_taken));
        for (auto const & rec : r.transcript) {
            ASSERT_GE(rec.proposals.size(), 1u);
            ASSERT_LE(rec.proposals.size(), static_cast<std::size_t>(cfg.max_retries));
        }
        if (!r.cause) {
            ASSERT_EQ(r.success, env.goal_reached());
        }
    }
    EXPECT_GT(episodes, 10);
}

TEST(RunEpisode, ScriptedHistoryScenario)
{
    auto sc = fixture("note-copy");
    auto script = testing::fixture_dir() / "scripted" / "note-copy.json";
    for (auto mode : {Ablation::Full, Ablation::ContextOnly, Ablation::VerifierOnly}) {
        EnvHandle env(sc);
        auto backend = ScriptedBackend::from_file(script);
        RunConfig cfg;
        cfg.ablation = mode;
        auto r = run_episode(env, backend, nullptr, sc.goal, cfg);
        if (mode == Ablation::VerifierOnly) {
            EXPECT_FALSE(r.success);
            EXPECT_TRUE(r.loop_flag);
        } else {
            EXPECT_TRUE(r.success) << to_string(mode);
            EXPECT_FALSE(r.loop_flag);
        }
    }
}

TEST(RunEpisode, BudgetAndErrorsBecomeCause)
{
    auto sc = fixture("settings-toggle");
    EnvHandle env(sc);
    FnBackend idle([](Role role, std::string const &) -> std::string {
        return role == Role::Decision ? "SCROLL down" : role == Role::Subgoal ? "1. wait" : "1. wait";
    });
    RunConfig cfg;
    cfg.max_steps = 5;
    auto r = run_episode(env, idle, nullptr, sc.goal, cfg);
    EXPECT_EQ(r.cause.value_or(""), "step budget exhausted");
    EXPECT_TRUE(r.loop_flag);
    EXPECT_FALSE(r.success);

    FnBackend broken([](Role, std::string const &) -> std::string { throw BackendError("offline"); });
    r = run_episode(env, broken, nullptr, sc.goal, {});
    EXPECT_EQ(r.cause.value_or(""), "offline");
    EXPECT_EQ(r.steps_taken, 0);
}

TEST(RunEpisode, RetrievalFeedsThePlanner)
{
    auto scs = testing::all_fixtures();
    auto eps = export_episodes(scs, {});
    auto kb = build_knowledge_base(WorkflowGraph{}, eps);
    auto sc = fixture("settings-toggle");
    EnvHandle env(sc);
    OracleBackend oracle(env);
    auto r = run_episode(env, oracle, &kb, sc.goal, {});
    ASSERT_FALSE(r.retrieved.empty());
    EXPECT_EQ(r.retrieved[0], "settings-toggle");
    EXPECT_TRUE(r.success);
}

} // namespace
} // namespace flowpilot
