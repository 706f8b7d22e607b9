// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/discovery.hpp"

#include "flowpilot/errors.hpp"
#include "flowpilot/rng.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace flowpilot {

namespace {

std::optional<std::string> match_embedded(
    WorkflowGraph const & graph,
    VectorIndex const & index,
    GuiState const & state,
    EmbeddingVector const & query,
    DiscoveryConfig const & cfg)
{
    if (index.empty()) {
        return std::nullopt;
    }
    auto const k = static_cast<std::size_t>(cfg.candidate_k);
    auto candidates = index.search_topk(query, k);
    // Extend with entries tied at the boundary so an exact duplicate is never
    // hidden behind equally scored neighbours with smaller keys.
    if (candidates.size() == k && index.size() > k) {
        auto const boundary = candidates.back().score;
        auto all = index.search_topk(query, index.size());
        for (std::size_t i = k; i < all.size() && all[i].score == boundary; ++i) {
            candidates.push_back(all[i]);
        }
    }

    auto const fp = state_fingerprint(state);
    for (auto const & c : candidates) {
        if (c.score < cfg.merge_threshold) {
            continue;
        }
        if (auto const * node = graph.node(c.key); node && state_fingerprint(node->canonical_state) == fp) {
            return c.key;
        }
    }
    auto const & top = candidates.front();
    if (top.score >= cfg.merge_threshold) {
        auto const * node = graph.node(top.key);
        if (node && node->canonical_state.app_id == state.app_id && node->canonical_state.screen_id == state.screen_id) {
            return top.key;
        }
    }
    return std::nullopt;
}

} // namespace

void DiscoveryConfig::validate() const
{
    if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) {
        throw InvalidArgument("sample_ratio must be in (0, 1]");
    }
    if (candidate_k < 1) {
        throw InvalidArgument("candidate_k must be >= 1");
    }
    if (!(merge_threshold >= 0.0 && merge_threshold <= 1.0)) {
        throw InvalidArgument("merge_threshold must be in [0, 1]");
    }
    if (workers < 1) {
        throw InvalidArgument("workers must be >= 1");
    }
}

TransitionKind RuleJudge::judge(Step const & step) const
{
    bool const jump = step.before.screen_id != step.after.screen_id || step.before.app_id != step.after.app_id;
    return jump ? TransitionKind::PageJump : TransitionKind::InPage;
}

std::string ModelJudge::render_context(Step const & step)
{
    auto describe = [](GuiState const & s) {
        std::string out = "app: " + s.app_id + " | screen: " + s.screen_id + "\n";
        out += s.text_digest.empty() ? "(no visible text)" : s.text_digest;
        return out;
    };
    return "BEFORE:\n" + describe(step.before) + "\n\nACTION: " + render_action(step.action) + "\n\nAFTER:\n" +
           describe(step.after) + "\n\nAnswer PAGE_JUMP or IN_PAGE.";
}

TransitionKind ModelJudge::parse_verdict(std::string const & response)
{
    auto const text = to_lower(response);
    bool const jump = text.find("page_jump") != std::string::npos || text.find("page jump") != std::string::npos;
    bool const in_page = text.find("in_page") != std::string::npos || text.find("in-page") != std::string::npos;
    if (jump == in_page) {
        throw ClassificationError("unparseable transition verdict: '" + response + "'", response);
    }
    return jump ? TransitionKind::PageJump : TransitionKind::InPage;
}

TransitionKind ModelJudge::judge(Step const & step) const
{
    return parse_verdict(backend_.complete(role_prompt(Role::Judge), render_context(step)));
}

TransitionKind classify_transition(TransitionJudge const & judge, Step const & step)
{
    return judge.judge(step);
}

std::vector<Episode> sample_corpus(std::span<Episode const> episodes, DiscoveryConfig const & cfg)
{
    cfg.validate();
    std::vector<std::size_t> chosen;
    for (auto cat : kAllCategories) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < episodes.size(); ++i) {
            if (episodes[i].category == cat) {
                members.push_back(i);
            }
        }
        if (members.empty()) {
            continue;
        }
        auto const exact = cfg.sample_ratio * static_cast<double>(members.size());
        auto take = static_cast<std::size_t>(std::ceil(exact - 1e-9));
        take = std::clamp<std::size_t>(take, 1, members.size());
        Rng rng(cfg.rng_seed, "sample/" + std::string(to_string(cat)));
        for (std::size_t i = 0; i < take; ++i) {
            auto j = i + static_cast<std::size_t>(rng.below(members.size() - i));
            std::swap(members[i], members[j]);
        }
        chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<Episode> out;
    out.reserve(chosen.size());
    for (auto i : chosen) {
        out.push_back(episodes[i]);
    }
    return out;
}

std::vector<CondensedTransition> condense_episode(TransitionJudge const & judge, Episode const & ep)
{
    std::vector<CondensedTransition> out;
    std::vector<Action> pending;
    std::size_t start = 0;

    auto summary_of = [](std::vector<Action> const & actions) {
        std::vector<std::string> parts;
        parts.reserve(actions.size());
        for (auto const & a : actions) {
            parts.push_back(render_action(a));
        }
        return join(parts, "; ");
    };

    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
        auto const & step = ep.steps[i];
        TransitionKind kind;
        try {
            kind = judge.judge(step);
        } catch (ClassificationError const & ex) {
            throw ClassificationError(
                "episode " + ep.episode_id + " step " + std::to_string(i) + ": " + ex.what(), ex.raw_response());
        }
        if (pending.empty()) {
            start = i;
        }
        pending.push_back(step.action);
        if (kind == TransitionKind::PageJump) {
            CondensedTransition t;
            t.before_state = ep.steps[start].before;
            t.after_state = step.after;
            t.action_summary = summary_of(pending);
            t.condensed_actions = std::move(pending);
            t.first_step = start;
            out.push_back(std::move(t));
            pending.clear();
        }
    }
    if (!pending.empty()) {
        CondensedTransition t;
        t.before_state = ep.steps[start].before;
        t.after_state = ep.steps.back().after;
        t.action_summary = std::string(kInPagePrefix) + summary_of(pending);
        t.condensed_actions = std::move(pending);
        t.in_page_only = true;
        t.first_step = start;
        out.push_back(std::move(t));
    }
    return out;
}

std::optional<std::string> match_node(
    WorkflowGraph const & graph,
    VectorIndex const & index,
    GuiState const & state,
    DiscoveryConfig const & cfg,
    Embedder const & embedder)
{
    if (index.empty()) {
        return std::nullopt;
    }
    return match_embedded(graph, index, state, embedder.embed_one(state.text_digest), cfg);
}

std::optional<std::string> match_node(
    WorkflowGraph const & graph,
    VectorIndex const & index,
    GuiState const & state,
    DiscoveryConfig const & cfg)
{
    return match_node(graph, index, state, cfg, LocalEmbedder{index.dimension() >= 2 ? index.dimension() : 64});
}

WorkflowGraph build_graph(
    std::span<Episode const> episodes,
    TransitionJudge const & judge,
    DiscoveryConfig const & cfg,
    Embedder const & embedder,
    DiscoveryStats * stats)
{
    cfg.validate();
    auto const sample = sample_corpus(episodes, cfg);

    std::vector<std::vector<CondensedTransition>> condensed(sample.size());
    if (cfg.workers > 1 && judge.concurrent_safe() && sample.size() > 1) {
        std::vector<std::future<void>> jobs;
        auto const workers = static_cast<std::size_t>(cfg.workers);
        for (std::size_t w = 0; w < workers; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < sample.size(); i += workers) {
                    condensed[i] = condense_episode(judge, sample[i]);
                }
            }));
        }
        for (auto & j : jobs) {
            j.get();
        }
    } else {
        for (std::size_t i = 0; i < sample.size(); ++i) {
            condensed[i] = condense_episode(judge, sample[i]);
        }
    }

    // Single-writer merge stage.
    WorkflowGraph graph;
    VectorIndex index(embedder.dimension());
    DiscoveryStats local;
    local.episodes_in = episodes.size();
    local.episodes_sampled = sample.size();

    auto resolve = [&](GuiState const & state) {
        auto emb = embedder.embed_one(state.text_digest);
        if (auto hit = match_embedded(graph, index, state, emb, cfg)) {
            graph.record_visit(*hit);
            ++local.merges;
            return *hit;
        }
        auto id = graph.add_node(state, emb);
        index.add(id, std::move(emb));
        return id;
    };

    for (auto const & transitions : condensed) {
        for (auto const & t : transitions) {
            auto src = resolve(t.before_state);
            auto dst = resolve(t.after_state);
            graph.add_edge(std::move(src), std::move(dst), t.action_summary, t.condensed_actions);
            ++local.transitions;
        }
    }
    if (stats) {
        *stats = local;
    }
    return graph;
}

WorkflowGraph build_graph(
    std::span<Episode const> episodes,
    TransitionJudge const & judge,
    DiscoveryConfig const & cfg,
    DiscoveryStats * stats)
{
    return build_graph(episodes, judge, cfg, LocalEmbedder{}, stats);
}

VectorIndex index_nodes(WorkflowGraph const & graph)
{
    std::size_t dim = graph.empty() ? 64 : graph.nodes().front().embedding.dimension();
    VectorIndex index(dim);
    for (auto const & n : graph.nodes()) {
        index.add(n.node_id, n.embedding);
    }
    return index;
}

} // namespace flowpilot
