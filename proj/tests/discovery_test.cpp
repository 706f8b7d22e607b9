// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/discovery.hpp"
#include "flowpilot/errors.hpp"
#include "flowpilot/serialize.hpp"
#include "flowpilot/sim.hpp"

#include "support/oracles.hpp"
#include "support/testing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

namespace flowpilot {
namespace {

using testing::endpoint_fingerprints;
using testing::random_walk;

Step jump_step(std::string const & from, std::string const & to, std::string const & target)
{
    auto a = make_state("app", from, {{target, ElementKind::Button, target}});
    auto b = make_state("app", to, {{"x", ElementKind::Label, to}});
    return {a, Action::tap(target), b};
}

class ScriptJudge final : public TransitionJudge
{
public:
    explicit ScriptJudge(std::string answer)
    : backend_({ScriptRule{Role::Judge, "", "", std::move(answer)}})
    , judge_(backend_)
    {}

    TransitionKind judge(Step const & step) const override { return judge_.judge(step); }

private:
    mutable ScriptedBackend backend_;
    ModelJudge judge_;
};

TEST(RuleJudgeTest, ScreenOrAppChange)
{
    RuleJudge j;
    EXPECT_EQ(j.judge(jump_step("a", "b", "t")), TransitionKind::PageJump);
    auto s = make_state("app", "a", {});
    EXPECT_EQ(j.judge({s, Action::scroll(ScrollDirection::Down), s}), TransitionKind::InPage);
    auto other_app = make_state("other", "a", {});
    EXPECT_EQ(j.judge({s, Action::navigate("other"), other_app}), TransitionKind::PageJump);
}

TEST(ModelJudgeTest, ParsesVerdicts)
{
    EXPECT_EQ(ModelJudge::parse_verdict("PAGE_JUMP"), TransitionKind::PageJump);
    EXPECT_EQ(ModelJudge::parse_verdict("This is a page jump."), TransitionKind::PageJump);
    EXPECT_EQ(ModelJudge::parse_verdict("in_page"), TransitionKind::InPage);
    EXPECT_EQ(ModelJudge::parse_verdict("In-page edit"), TransitionKind::InPage);
    try {
        (void)ModelJudge::parse_verdict("no idea");
        FAIL();
    } catch (ClassificationError const & ex) {
        EXPECT_EQ(ex.raw_response(), "no idea");
    }
    EXPECT_THROW((void)ModelJudge::parse_verdict("page_jump or in_page"), ClassificationError);
}

TEST(ModelJudgeTest, ContextCarriesBothStatesAndAction)
{
    auto ctx = ModelJudge::render_context(jump_step("home", "search", "search_btn"));
    EXPECT_NE(ctx.find("screen: home"), std::string::npos);
    EXPECT_NE(ctx.find("screen: search"), std::string::npos);
    EXPECT_NE(ctx.find("TAP search_btn"), std::string::npos);
}

TEST(ModelJudgeTest, ErrorsNameEpisodeAndStep)
{
    ScriptJudge judge("hmm");
    Episode ep;
    ep.episode_id = "ep-9";
    ep.steps = {jump_step("a", "b", "t")};
    try {
        (void)condense_episode(judge, ep);
        FAIL();
    } catch (ClassificationError const & ex) {
        EXPECT_NE(std::string(ex.what()).find("episode ep-9 step 0"), std::string::npos) << ex.what();
        EXPECT_EQ(ex.raw_response(), "hmm");
    }
}

TEST(SampleCorpus, PerCategoryCeilAndOrder)
{
    std::vector<Episode> eps;
    for (int i = 0; i < 120; ++i) {
        Episode e;
        e.episode_id = "e" + std::to_string(i);
        e.category = i < 100 ? Category::Tool : Category::Media;
        eps.push_back(e);
    }
    DiscoveryConfig cfg;
    cfg.rng_seed = 5;
    auto s = sample_corpus(eps, cfg);
    std::map<Category, int> counts;
    for (auto const & e : s) {
        ++counts[e.category];
    }
    EXPECT_EQ(counts[Category::Tool], 2);  // ceil(100 / 50)
    EXPECT_EQ(counts[Category::Media], 1); // ceil(20 / 50)
    for (std::size_t i = 1; i < s.size(); ++i) {
        EXPECT_LT(std::stoi(s[i - 1].episode_id.substr(1)), std::stoi(s[i].episode_id.substr(1)));
    }
    EXPECT_EQ(sample_corpus(eps, cfg), s);

    cfg.sample_ratio = 1.0;
    EXPECT_EQ(sample_corpus(eps, cfg).size(), eps.size());
    cfg.sample_ratio = 0.0;
    EXPECT_THROW((void)sample_corpus(eps, cfg), InvalidArgument);
}

TEST(SampleCorpus, SeedChangesSelection)
{
    std::vector<Episode> eps(500);
    for (std::size_t i = 0; i < eps.size(); ++i) {
        eps[i].episode_id = std::to_string(i);
    }
    DiscoveryConfig a;
    DiscoveryConfig b;
    b.rng_seed = 99;
    EXPECT_NE(sample_corpus(eps, a), sample_corpus(eps, b));
}

TEST(Condense, AllJumpsAreOnePerStep)
{
    Episode ep;
    ep.episode_id = "e";
    ep.steps = {jump_step("a", "b", "t1"), jump_step("b", "c", "t2")};
    ep.steps[1].before = ep.steps[0].after;
    auto out = condense_episode(RuleJudge{}, ep);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].action_summary, "TAP t1");
    EXPECT_FALSE(out[1].in_page_only);
}

TEST(Condense, InPageRunsAttachToNextJump)
{
    auto sc = testing::fixture("shop-checkout");
    auto eps = export_episodes(std::vector<Scenario>{sc}, {});
    auto out = condense_episode(RuleJudge{}, eps[0]);
    // search: TAP query_field; TYPE query_field "mug"; TAP submit_btn
    auto it = std::find_if(out.begin(), out.end(), [](auto const & t) { return t.after_state.screen_id == "results"; });
    ASSERT_NE(it, out.end());
    EXPECT_EQ(it->action_summary, "TAP query_field; TYPE query_field \"mug\"; TAP submit_btn");
    EXPECT_EQ(it->condensed_actions.size(), 3u);
    EXPECT_EQ(it->before_state.find("query_field")->label, "");
    // Final COMPLETE is a trailing in-page run.
    EXPECT_TRUE(out.back().in_page_only);
    EXPECT_EQ(out.back().action_summary, "[in-page] COMPLETE");
}

TEST(Condense, LosslessOnRandomEpisodes)
{
    Rng rng(2024);
    auto scs = testing::all_fixtures();
    for (int i = 0; i < 100; ++i) {
        auto const & sc = scs[rng.below(scs.size())];
        auto ep = random_walk(sc, rng, 1 + rng.below(25), "r" + std::to_string(i));
        auto out = condense_episode(RuleJudge{}, ep);
        std::vector<Action> flat;
        for (auto const & t : out) {
            flat.insert(flat.end(), t.condensed_actions.begin(), t.condensed_actions.end());
        }
        std::vector<Action> original;
        for (auto const & s : ep.steps) {
            original.push_back(s.action);
        }
        ASSERT_EQ(flat, original) << ep.episode_id;
        for (std::size_t k = 0; k + 1 < out.size(); ++k) {
            ASSERT_FALSE(out[k].in_page_only);
            ASSERT_EQ(out[k].after_state, out[k + 1].before_state);
        }
    }
}

TEST(BuildGraph, NodeCountMatchesFingerprintOracle)
{
    auto sc = testing::fixture("shop-checkout");
    ExportOptions opts;
    opts.copies = 20;
    opts.detour_seed = 3;
    auto eps = export_episodes(std::vector<Scenario>{sc}, opts);
    DiscoveryConfig cfg;
    cfg.sample_ratio = 1.0;
    DiscoveryStats stats;
    auto g = build_graph(eps, RuleJudge{}, cfg, &stats);
    EXPECT_EQ(g.nodes().size(), endpoint_fingerprints(eps).size());
    EXPECT_TRUE(g.check_invariants().empty());
    EXPECT_EQ(stats.episodes_sampled, 20u);

    int visits = 0;
    for (auto const & n : g.nodes()) {
        visits += n.visit_count;
    }
    EXPECT_EQ(static_cast<std::size_t>(visits), 2 * stats.transitions);
    EXPECT_EQ(stats.merges + g.nodes().size(), 2 * stats.transitions);
}

TEST(BuildGraph, AllFixturesRandomWalksMatchOracle)
{
    Rng rng(77);
    std::vector<Episode> eps;
    auto scs = testing::all_fixtures();
    for (int i = 0; i < 60; ++i) {
        eps.push_back(random_walk(scs[rng.below(scs.size())], rng, 1 + rng.below(20), "w" + std::to_string(i)));
    }
    DiscoveryConfig cfg;
    cfg.sample_ratio = 1.0;
    auto g = build_graph(eps, RuleJudge{}, cfg);
    // Label-level merges of near-identical screens can only lower the count.
    EXPECT_LE(g.nodes().size(), endpoint_fingerprints(eps).size());
    EXPECT_TRUE(g.check_invariants().empty());
}

TEST(BuildGraph, DeterministicAndWorkerInvariant)
{
    ExportOptions opts;
    opts.copies = 6;
    opts.detour_seed = 11;
    auto eps = export_episodes(testing::all_fixtures(), opts);
    DiscoveryConfig cfg;
    cfg.sample_ratio = 0.5;
    cfg.rng_seed = 4;
    auto a = graph_to_json(build_graph(eps, RuleJudge{}, cfg));
    auto b = graph_to_json(build_graph(eps, RuleJudge{}, cfg));
    cfg.workers = 4;
    auto c = graph_to_json(build_graph(eps, RuleJudge{}, cfg));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(BuildGraph, EdgesBumpSupport)
{
    auto sc = testing::fixture("settings-toggle");
    ExportOptions opts;
    opts.copies = 3;
    auto eps = export_episodes(std::vector<Scenario>{sc}, opts);
    DiscoveryConfig cfg;
    cfg.sample_ratio = 1.0;
    auto g = build_graph(eps, RuleJudge{}, cfg);
    for (auto const & e : g.edges()) {
        EXPECT_EQ(e.support_count, 3) << e.action_summary;
    }
}

TEST(MatchNode, ExactDuplicateAndMiss)
{
    WorkflowGraph g;
    auto s = make_state("shop", "home", {{"t", ElementKind::Label, "Shop"}, {"b", ElementKind::Button, "Cart"}});
    auto id = g.add_node(s, embed_text(s.text_digest));
    auto idx = index_nodes(g);
    DiscoveryConfig cfg;
    EXPECT_EQ(match_node(g, idx, s, cfg), id);

    auto reordered = make_state("shop", "home", {s.elements[1], s.elements[0]});
    EXPECT_EQ(match_node(g, idx, reordered, cfg), id);

    auto other = make_state("shop", "cart", {{"x", ElementKind::Label, "Your cart is empty"}});
    EXPECT_FALSE(match_node(g, idx, other, cfg).has_value());

    VectorIndex empty(64);
    EXPECT_FALSE(match_node(WorkflowGraph{}, empty, s, cfg).has_value());
}

TEST(MatchNode, DuplicateBeyondTopKStillFound)
{
    // Many same-score decoys with smaller ids than the true duplicate.
    WorkflowGraph g;
    auto target = make_state("z", "z", {{"a", ElementKind::Label, "alpha"}});
    for (int i = 0; i < 6; ++i) {
        (void)g.add_node(make_state("d" + std::to_string(i), "d", {{"a", ElementKind::Label, "alpha"}}),
                         embed_text("alpha"));
    }
    auto id = g.add_node(target, embed_text("alpha"));
    auto idx = index_nodes(g);
    EXPECT_EQ(match_node(g, idx, target, DiscoveryConfig{}), id);
}

} // namespace
} // namespace flowpilot
