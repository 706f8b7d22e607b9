// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowpilot/agent.hpp"
#include "flowpilot/http.hpp"
#include "flowpilot/oracle.hpp"
#include "flowpilot/rag.hpp"
#include "flowpilot/serialize.hpp"
#include "flowpilot/sim.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowpilot {

/// Kinds and targets equal; TYPE texts equal after trim + casefold;
/// SCROLL directions equal.
[[nodiscard]] bool action_match(Action const & predicted, Action const & gold);

struct ActionPair
{
    std::vector<Action> predicted;
    std::vector<Action> gold;
};

/// Fraction of gold steps matched index by index. Surplus predictions are
/// ignored; missing ones count as mismatches. Throws UndefinedInputError
/// on an empty gold path.
[[nodiscard]] double step_match_fraction(std::span<Action const> predicted, std::span<Action const> gold);

/// Mean of per-episode step-match fractions. Throws UndefinedInputError on
/// an empty list.
[[nodiscard]] double compute_ams(std::span<ActionPair const> episodes);

/// successes / total. Throws UndefinedInputError on an empty list.
[[nodiscard]] double compute_sr(std::vector<bool> const & successes);
[[nodiscard]] double compute_sr(std::span<EpisodeResult const> results);

/// Which generation backend each benchmark episode gets. Parsed from
/// "oracle", "scripted:<file>" or "remote".
struct BackendSpec
{
    enum class Kind { Oracle, Scripted, Remote };

    Kind kind = Kind::Oracle;
    FaultConfig faults;
    std::filesystem::path script;
    EndpointConfig endpoint;

    [[nodiscard]] static BackendSpec parse(std::string const & text);
    [[nodiscard]] std::string describe() const;

    /// A fresh backend bound to one episode's environment.
    [[nodiscard]] std::unique_ptr<GenerationBackend> make(EnvHandle const & env) const;
};

/// "0" or "per-step:<p>".
[[nodiscard]] double parse_fault_spec(std::string const & text);

struct EpisodeRecord
{
    std::string scenario_id;
    Category category = Category::Tool;
    std::vector<Action> gold;
    double match_fraction = 0.0;
    EpisodeResult result;
};

struct MetricCell
{
    double ams = 0.0;
    double sr = 0.0;
    int episodes = 0;
};

struct EvalReport
{
    RunConfig config;
    std::string backend;
    std::uint64_t seed = 0;
    std::map<Category, MetricCell> per_category;
    MetricCell overall;
    double loop_rate = 0.0;
    std::vector<EpisodeRecord> records;
};

struct BenchmarkOptions
{
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Every scenario under every config. Episode failures are recorded in
/// their EpisodeResult and never abort the batch. Results are ordered by
/// scenario, independent of the worker count.
[[nodiscard]] std::vector<EvalReport> run_benchmark(
    std::span<Scenario const> scenarios,
    KnowledgeBase const * kb,
    BackendSpec const & backend,
    std::span<RunConfig const> configs,
    BenchmarkOptions const & opts = {});

/// Aggregates per-category and overall metrics from the records.
void summarize(EvalReport & report);

void to_json(json & j, EvalReport const & r);

/// Aligned text table, one row per report, category columns in the order
/// Tool, Information, Shopping, Media, Social, Multi-Apps, then Overall.
[[nodiscard]] std::string render_table(std::span<EvalReport const> reports);

} // namespace flowpilot
