// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/rag.hpp"

#include "flowpilot/errors.hpp"

#include <cstdio>
#include <set>
#include <tuple>
#include <unordered_map>

namespace flowpilot {

namespace {

std::string score3(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

std::string triplet_line(std::string_view src, std::string_view action, std::string_view dst)
{
    std::string out = "(";
    out += src;
    out += ") --[";
    out += action;
    out += "]--> (";
    out += dst;
    out += ")";
    return out;
}

} // namespace

KnowledgeBase::KnowledgeBase(WorkflowGraph graph, std::vector<TraceSummary> traces, std::shared_ptr<Embedder const> embedder)
: graph_(std::move(graph))
, traces_(std::move(traces))
, embedder_(embedder ? std::move(embedder) : std::make_shared<LocalEmbedder const>())
, index_(embedder_->dimension())
{
    for (auto const & t : traces_) {
        if (t.linearized_path.empty()) {
            throw InvalidArgument("trace '" + t.episode_id + "' has an empty linearized path");
        }
        index_.add(t.episode_id, t.embedding);
    }
}

TraceSummary const * KnowledgeBase::trace(std::string_view episode_id) const
{
    for (auto const & t : traces_) {
        if (t.episode_id == episode_id) {
            return &t;
        }
    }
    return nullptr;
}

std::string state_summary(GuiState const & state)
{
    return state.app_id + "/" + state.screen_id;
}

KnowledgeBase build_knowledge_base(
    WorkflowGraph graph,
    std::span<Episode const> episodes,
    std::shared_ptr<Embedder const> embedder,
    TransitionJudge const & judge)
{
    if (!embedder) {
        embedder = std::make_shared<LocalEmbedder const>();
    }
    std::unordered_map<std::string, std::string> node_by_fp;
    for (auto const & n : graph.nodes()) {
        node_by_fp.emplace(state_fingerprint(n.canonical_state), n.node_id);
    }
    auto node_of = [&](GuiState const & s) -> std::optional<std::string> {
        auto it = node_by_fp.find(state_fingerprint(s));
        if (it == node_by_fp.end()) {
            return std::nullopt;
        }
        return it->second;
    };

    std::vector<TraceSummary> traces;
    std::set<std::string> ids;
    std::vector<std::string> goals;
    for (auto const & ep : episodes) {
        if (!ids.insert(ep.episode_id).second) {
            throw InvalidArgument("duplicate episode id '" + ep.episode_id + "'");
        }
        TraceSummary t;
        t.episode_id = ep.episode_id;
        t.goal = ep.goal;
        std::vector<std::string> lines;
        for (auto const & ct : condense_episode(judge, ep)) {
            PathTriplet p{state_summary(ct.before_state), ct.action_summary, state_summary(ct.after_state),
                          node_of(ct.before_state), node_of(ct.after_state)};
            lines.push_back(triplet_line(p.src_summary, p.action_summary, p.dst_summary));
            t.triplets.push_back(std::move(p));
        }
        t.linearized_path = join(lines, "\n");
        traces.push_back(std::move(t));
        goals.push_back(ep.goal);
    }
    auto vectors = embedder->embed(goals);
    for (std::size_t i = 0; i < traces.size(); ++i) {
        traces[i].embedding = std::move(vectors[i]);
    }
    return KnowledgeBase(std::move(graph), std::move(traces), std::move(embedder));
}

std::vector<RetrievedTrace> retrieve_traces(KnowledgeBase const & kb, std::string_view query, std::size_t k)
{
    if (k < 1) {
        throw InvalidArgument("k must be >= 1");
    }
    if (kb.index().empty()) {
        return {};
    }
    auto const q = kb.embedder().embed_one(query);
    std::vector<RetrievedTrace> out;
    for (auto const & hit : kb.index().search_topk(q, k)) {
        out.push_back({*kb.trace(hit.key), hit.score});
    }
    return out;
}

std::string AugmentedContext::prompt_text() const
{
    return guideline_text.empty() ? std::string(kNoPriorTraces) : guideline_text;
}

AugmentedContext build_context(
    std::span<RetrievedTrace const> retrieved,
    WorkflowGraph const & graph,
    std::size_t budget_chars)
{
    if (budget_chars < static_cast<std::size_t>(kMinContextBudget)) {
        throw InvalidArgument("context budget must be >= " + std::to_string(kMinContextBudget) + " chars");
    }
    auto node_label = [&](std::string const & id) {
        auto const * n = graph.node(id);
        return n ? state_summary(n->canonical_state) : id;
    };

    AugmentedContext ctx;
    for (std::size_t r = 0; r < retrieved.size(); ++r) {
        auto const & [trace, score] = retrieved[r];
        std::string block = "Trace " + std::to_string(r + 1) + ": " + trace.goal + " (score " + score3(score) + ")\n";
        block += trace.linearized_path;
        block += '\n';

        std::set<std::string> mentioned;
        std::set<std::tuple<std::string, std::string, std::string>> used;
        for (auto const & t : trace.triplets) {
            if (t.src_node) {
                mentioned.insert(*t.src_node);
            }
            if (t.dst_node) {
                mentioned.insert(*t.dst_node);
            }
            if (t.src_node && t.dst_node) {
                used.emplace(*t.src_node, *t.dst_node, t.action_summary);
            }
        }
        std::vector<std::string> hints;
        for (auto const & e : graph.edges()) {
            if (!mentioned.count(e.src) && !mentioned.count(e.dst)) {
                continue;
            }
            if (used.count({e.src, e.dst, e.action_summary})) {
                continue;
            }
            hints.push_back(triplet_line(node_label(e.src), e.action_summary, node_label(e.dst)));
        }
        if (!hints.empty()) {
            block += "Neighbor hints:\n";
            for (auto const & h : hints) {
                block += h;
                block += '\n';
            }
        }
        if (r > 0) {
            block.insert(0, "\n");
        }
        if (ctx.guideline_text.size() + block.size() > budget_chars) {
            break;
        }
        ctx.guideline_text += block;
        ctx.source_episode_ids.push_back(trace.episode_id);
        ctx.retrieved_scores.push_back(score);
    }
    return ctx;
}

} // namespace flowpilot
