// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/agent.hpp"
#include "flowpilot/discovery.hpp"
#include "flowpilot/errors.hpp"
#include "flowpilot/eval.hpp"
#include "flowpilot/oracle.hpp"
#include "flowpilot/rag.hpp"
#include "flowpilot/remote_embedder.hpp"
#include "flowpilot/serialize.hpp"
#include "flowpilot/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>

using namespace flowpilot;

namespace {

struct BackendArgs
{
    std::string backend = "oracle";
    std::string config = "flowpilot.json";
};

EndpointConfig endpoint_for(std::string const & config, std::string_view section)
{
    return endpoint_from_config(load_config(config), section);
}

BackendSpec backend_spec(BackendArgs const & args)
{
    auto spec = BackendSpec::parse(args.backend);
    if (spec.kind == BackendSpec::Kind::Remote) {
        spec.endpoint = endpoint_for(args.config, "backend");
    }
    return spec;
}

std::shared_ptr<Embedder const> make_embedder(std::string const & kind, std::string const & config, std::size_t dim)
{
    if (kind == "local") {
        return std::make_shared<LocalEmbedder const>(dim);
    }
    if (kind == "remote") {
        return std::make_shared<RemoteEmbedder const>(endpoint_for(config, "embedding"), dim);
    }
    throw InvalidArgument("embedder must be local or remote, got '" + kind + "'");
}

std::optional<KnowledgeBase> load_kb(
    std::string const & kb_path,
    std::string const & traces_path,
    std::shared_ptr<Embedder const> embedder)
{
    if (kb_path.empty() && traces_path.empty()) {
        return std::nullopt;
    }
    WorkflowGraph graph;
    if (!kb_path.empty()) {
        graph = read_graph(kb_path);
    }
    std::vector<Episode> traces;
    if (!traces_path.empty()) {
        traces = read_episodes(traces_path);
    }
    return build_knowledge_base(std::move(graph), traces, std::move(embedder));
}

void write_or_print(std::string const & out, std::string const & text)
{
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_file(out, text);
    }
}

} // namespace

int main(int argc, char ** argv)
{
    CLI::App app{"flowpilot: workflow-graph discovery, retrieval and closed-loop GUI agent runs"};
    app.require_subcommand(1);

    // discover ---------------------------------------------------------------
    auto * discover = app.add_subcommand("discover", "Build a workflow graph from recorded episodes");
    std::string d_episodes;
    std::string d_out;
    std::string d_judge = "rule";
    std::string d_embedder = "local";
    BackendArgs d_backend;
    DiscoveryConfig d_cfg;
    discover->add_option("--episodes", d_episodes, "Episodes JSONL")->required()->check(CLI::ExistingFile);
    discover->add_option("--out", d_out, "Graph JSON output")->required();
    discover->add_option("--ratio", d_cfg.sample_ratio, "Per-category sampling ratio")->capture_default_str();
    discover->add_option("--seed", d_cfg.rng_seed, "Sampling seed")->capture_default_str();
    discover->add_option("--k", d_cfg.candidate_k, "Merge candidates")->capture_default_str();
    discover->add_option("--threshold", d_cfg.merge_threshold, "Merge similarity threshold")->capture_default_str();
    discover->add_option("--workers", d_cfg.workers, "Condensation threads")->capture_default_str();
    discover->add_option("--judge", d_judge, "Transition judge")->check(CLI::IsMember({"rule", "model"}))->capture_default_str();
    discover->add_option("--backend", d_backend.backend, "Judge backend for --judge model: scripted:<file>|remote");
    discover->add_option("--config", d_backend.config, "Endpoint config file")->capture_default_str();
    discover->add_option("--embedder", d_embedder, "local|remote")->capture_default_str();
    std::size_t d_dim = 64;
    discover->add_option("--dim", d_dim, "Embedding dimension")->capture_default_str();

    // retrieve ---------------------------------------------------------------
    auto * retrieve = app.add_subcommand("retrieve", "Rank stored traces against a query");
    std::string r_kb;
    std::string r_traces;
    std::string r_query;
    std::string r_embedder = "local";
    std::string r_config = "flowpilot.json";
    std::size_t r_k = 3;
    std::size_t r_budget = 4000;
    retrieve->add_option("--kb", r_kb, "Graph JSON")->required()->check(CLI::ExistingFile);
    retrieve->add_option("--traces", r_traces, "Episodes JSONL")->required()->check(CLI::ExistingFile);
    retrieve->add_option("--query", r_query, "Task description")->required();
    retrieve->add_option("--k", r_k, "Traces to return")->capture_default_str();
    retrieve->add_option("--budget", r_budget, "Context budget in characters")->capture_default_str();
    retrieve->add_option("--embedder", r_embedder, "local|remote")->capture_default_str();
    std::size_t r_dim = 64;
    retrieve->add_option("--dim", r_dim, "Embedding dimension")->capture_default_str();
    retrieve->add_option("--config", r_config, "Endpoint config file")->capture_default_str();

    // run --------------------------------------------------------------------
    auto * run = app.add_subcommand("run", "Run one episode against a simulated scenario");
    std::string u_kb;
    std::string u_traces;
    std::string u_scenario;
    std::string u_query;
    std::string u_ablation = "full";
    std::string u_faults = "0";
    std::string u_out;
    std::uint64_t u_seed = 0;
    BackendArgs u_backend;
    RunConfig u_cfg;
    run->add_option("--kb", u_kb, "Graph JSON")->check(CLI::ExistingFile);
    run->add_option("--traces", u_traces, "Episodes JSONL")->check(CLI::ExistingFile);
    run->add_option("--scenario", u_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--query", u_query, "Task description (default: the scenario goal)");
    run->add_option("--backend", u_backend.backend, "oracle|scripted:<file>|remote")->capture_default_str();
    run->add_option("--config", u_backend.config, "Endpoint config file")->capture_default_str();
    run->add_option("--ablation", u_ablation, "full|context|verifier")
        ->check(CLI::IsMember({"full", "context", "verifier"}))
        ->capture_default_str();
    run->add_option("--faults", u_faults, "Oracle fault injection: 0|per-step:<p>")->capture_default_str();
    run->add_option("--seed", u_seed, "Seed for fault injection")->capture_default_str();
    run->add_option("--max-steps", u_cfg.max_steps, "Step budget")->capture_default_str();
    run->add_option("--max-retries", u_cfg.max_retries, "Decide attempts per step")->capture_default_str();
    run->add_option("--k", u_cfg.k_traces, "Retrieved traces")->capture_default_str();
    run->add_option("--out", u_out, "EpisodeResult JSON output (default: stdout)");

    // simgen -----------------------------------------------------------------
    auto * simgen = app.add_subcommand("simgen", "Export gold-path episodes from scenarios");
    std::string s_dir;
    std::string s_out;
    std::optional<std::uint64_t> s_seed;
    ExportOptions s_opts;
    simgen->add_option("--scenarios", s_dir, "Scenario directory")->required()->check(CLI::ExistingDirectory);
    simgen->add_option("--out", s_out, "Episodes JSONL output")->required();
    simgen->add_option("--seed", s_seed, "Detour seed (omit for plain gold paths)");
    simgen->add_option("--copies", s_opts.copies, "Episodes per scenario")->capture_default_str();
    simgen->add_option("--detour-rate", s_opts.detour_rate, "Detour probability per step")->capture_default_str();

    // eval -------------------------------------------------------------------
    auto * eval = app.add_subcommand("eval", "Benchmark scenarios under ablation configurations");
    std::string e_dir;
    std::string e_kb;
    std::string e_traces;
    std::string e_faults = "0";
    std::string e_ablations = "full,context,verifier";
    std::string e_out;
    BackendArgs e_backend;
    BenchmarkOptions e_opts;
    int e_max_steps = RunConfig{}.max_steps;
    eval->add_option("--scenarios", e_dir, "Scenario directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--kb", e_kb, "Graph JSON")->check(CLI::ExistingFile);
    eval->add_option("--traces", e_traces, "Episodes JSONL")->check(CLI::ExistingFile);
    eval->add_option("--backend", e_backend.backend, "oracle|scripted:<file>|remote")->capture_default_str();
    eval->add_option("--config", e_backend.config, "Endpoint config file")->capture_default_str();
    eval->add_option("--faults", e_faults, "0|per-step:<p>")->capture_default_str();
    eval->add_option("--ablations", e_ablations, "Comma-separated modes")->capture_default_str();
    eval->add_option("--seed", e_opts.seed, "Shared seed")->capture_default_str();
    eval->add_option("--workers", e_opts.workers, "Concurrent episodes")->capture_default_str();
    eval->add_option("--max-steps", e_max_steps, "Step budget")->capture_default_str();
    eval->add_option("--out", e_out, "Report JSON output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*discover) {
            auto episodes = read_episodes(d_episodes);
            std::unique_ptr<GenerationBackend> judge_backend;
            std::unique_ptr<TransitionJudge> judge;
            if (d_judge == "model") {
                auto spec = backend_spec(d_backend);
                if (spec.kind == BackendSpec::Kind::Oracle) {
                    throw InvalidArgument("--judge model needs --backend scripted:<file> or remote");
                }
                judge_backend = spec.kind == BackendSpec::Kind::Scripted
                                    ? std::unique_ptr<GenerationBackend>(
                                          std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(spec.script)))
                                    : std::make_unique<RemoteBackend>(spec.endpoint);
                judge = std::make_unique<ModelJudge>(*judge_backend);
            } else {
                judge = std::make_unique<RuleJudge>();
            }
            auto embedder = make_embedder(d_embedder, d_backend.config, d_dim);
            DiscoveryStats stats;
            auto graph = build_graph(episodes, *judge, d_cfg, *embedder, &stats);
            write_graph(d_out, graph);
            std::printf(
                "nodes=%zu edges=%zu merges=%zu sampled=%zu/%zu transitions=%zu\n", graph.nodes().size(),
                graph.edges().size(), stats.merges, stats.episodes_sampled, stats.episodes_in, stats.transitions);
            return 0;
        }

        if (*retrieve) {
            auto kb = load_kb(r_kb, r_traces, make_embedder(r_embedder, r_config, r_dim));
            auto hits = retrieve_traces(*kb, r_query, r_k);
            for (std::size_t i = 0; i < hits.size(); ++i) {
                std::printf("%zu\t%.6f\t%s\t%s\n", i + 1, hits[i].score, hits[i].trace.episode_id.c_str(),
                            hits[i].trace.goal.c_str());
            }
            auto ctx = build_context(hits, kb->graph(), r_budget);
            std::cout << "\n" << ctx.prompt_text();
            return 0;
        }

        if (*run) {
            auto scenario = std::make_shared<Scenario const>(load_scenario(u_scenario));
            auto kb = load_kb(u_kb, u_traces, nullptr);
            auto spec = backend_spec(u_backend);
            spec.faults = {parse_fault_spec(u_faults), u_seed};
            u_cfg.ablation = *parse_ablation(u_ablation);
            EnvHandle env(scenario);
            auto backend = spec.make(env);
            auto query = u_query.empty() ? scenario->goal : u_query;
            auto result = run_episode(env, *backend, kb ? &*kb : nullptr, query, u_cfg);
            write_or_print(u_out, json(result).dump(2) + "\n");
            std::fprintf(
                stderr, "success=%s steps=%d loop_flag=%s%s%s\n", result.success ? "true" : "false",
                result.steps_taken, result.loop_flag ? "true" : "false", result.cause ? " cause=" : "",
                result.cause ? result.cause->c_str() : "");
            return 0;
        }

        if (*simgen) {
            auto scenarios = load_scenarios(s_dir);
            s_opts.detour_seed = s_seed;
            auto episodes = export_episodes(scenarios, s_opts);
            write_episodes(s_out, episodes);
            std::printf("scenarios=%zu episodes=%zu\n", scenarios.size(), episodes.size());
            return 0;
        }

        if (*eval) {
            auto scenarios = load_scenarios(e_dir);
            auto kb = load_kb(e_kb, e_traces, nullptr);
            auto spec = backend_spec(e_backend);
            spec.faults.per_step = parse_fault_spec(e_faults);
            std::vector<RunConfig> configs;
            std::size_t pos = 0;
            while (pos <= e_ablations.size()) {
                auto end = e_ablations.find(',', pos);
                if (end == std::string::npos) {
                    end = e_ablations.size();
                }
                auto name = trim(e_ablations.substr(pos, end - pos));
                auto mode = parse_ablation(name);
                if (!mode) {
                    throw InvalidArgument("unknown ablation '" + name + "'");
                }
                RunConfig cfg;
                cfg.ablation = *mode;
                cfg.max_steps = e_max_steps;
                configs.push_back(cfg);
                pos = end + 1;
            }
            auto reports = run_benchmark(scenarios, kb ? &*kb : nullptr, spec, configs, e_opts);
            std::cout << render_table(reports);
            if (!e_out.empty()) {
                write_file(e_out, json(reports).dump(2) + "\n");
            }
            return 0;
        }
    } catch (Error const & ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    } catch (std::exception const & ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
