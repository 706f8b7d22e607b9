// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowpilot/eval.hpp"

#include "flowpilot/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <future>

namespace flowpilot {

namespace {

std::string pct(double v)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width) {
        s.insert(0, width - s.size(), ' ');
    }
    return s;
}

std::string column_name(Category c)
{
    return c == Category::MultiApps ? "Multi-Apps" : std::string(to_string(c));
}

json cell_json(MetricCell const & c)
{
    return json{{"ams", c.ams}, {"sr", c.sr}, {"episodes", c.episodes}};
}

} // namespace

bool action_match(Action const & predicted, Action const & gold)
{
    if (predicted.kind != gold.kind || predicted.target != gold.target) {
        return false;
    }
    if (gold.kind == ActionKind::Type) {
        return to_lower(trim(predicted.text.value_or(""))) == to_lower(trim(gold.text.value_or("")));
    }
    if (gold.kind == ActionKind::Scroll) {
        return predicted.direction == gold.direction;
    }
    return true;
}

double step_match_fraction(std::span<Action const> predicted, std::span<Action const> gold)
{
    if (gold.empty()) {
        throw UndefinedInputError("gold path is empty");
    }
    std::size_t hits = 0;
    auto const n = std::min(predicted.size(), gold.size());
    for (std::size_t i = 0; i < n; ++i) {
        hits += action_match(predicted[i], gold[i]) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double compute_ams(std::span<ActionPair const> episodes)
{
    if (episodes.empty()) {
        throw UndefinedInputError("AMS over zero episodes");
    }
    double sum = 0.0;
    for (auto const & e : episodes) {
        sum += step_match_fraction(e.predicted, e.gold);
    }
    return sum / static_cast<double>(episodes.size());
}

double compute_sr(std::vector<bool> const & successes)
{
    if (successes.empty()) {
        throw UndefinedInputError("SR over zero episodes");
    }
    std::size_t ok = 0;
    for (bool s : successes) {
        ok += s ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(successes.size());
}

double compute_sr(std::span<EpisodeResult const> results)
{
    std::vector<bool> ok;
    ok.reserve(results.size());
    for (auto const & r : results) {
        ok.push_back(r.success);
    }
    return compute_sr(ok);
}

// ---------------------------------------------------------------------------

double parse_fault_spec(std::string const & text)
{
    if (text == "0") {
        return 0.0;
    }
    constexpr std::string_view prefix = "per-step:";
    if (text.starts_with(prefix)) {
        try {
            std::size_t used = 0;
            auto const rest = text.substr(prefix.size());
            double p = std::stod(rest, &used);
            if (used == rest.size() && p >= 0.0 && p <= 1.0) {
                return p;
            }
        } catch (std::exception const &) {
        }
    }
    throw InvalidArgument("fault spec must be 0 or per-step:<p> with p in [0, 1], got '" + text + "'");
}

BackendSpec BackendSpec::parse(std::string const & text)
{
    BackendSpec spec;
    if (text == "oracle") {
        spec.kind = Kind::Oracle;
    } else if (text == "remote") {
        spec.kind = Kind::Remote;
    } else if (text.starts_with("scripted:") && text.size() > 9) {
        spec.kind = Kind::Scripted;
        spec.script = text.substr(9);
    } else {
        throw InvalidArgument("backend must be oracle, scripted:<file> or remote, got '" + text + "'");
    }
    return spec;
}

std::string BackendSpec::describe() const
{
    switch (kind) {
    case Kind::Oracle: return faults.per_step > 0.0 ? "oracle(per-step:" + pct(faults.per_step) + "%)" : "oracle";
    case Kind::Scripted: return "scripted:" + script.string();
    case Kind::Remote: return "remote:" + endpoint.url;
    }
    return "?";
}

std::unique_ptr<GenerationBackend> BackendSpec::make(EnvHandle const & env) const
{
    switch (kind) {
    case Kind::Oracle: return std::make_unique<OracleBackend>(env, faults);
    case Kind::Scripted: return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(script));
    case Kind::Remote: return std::make_unique<RemoteBackend>(endpoint);
    }
    throw InvalidArgument("unknown backend kind");
}

// ---------------------------------------------------------------------------

void summarize(EvalReport & report)
{
    report.per_category.clear();
    std::map<Category, std::vector<ActionPair>> pairs;
    std::map<Category, std::vector<bool>> wins;
    std::vector<ActionPair> all_pairs;
    std::vector<bool> all_wins;
    int loops = 0;
    for (auto const & r : report.records) {
        ActionPair p{r.result.predicted_actions, r.gold};
        pairs[r.category].push_back(p);
        wins[r.category].push_back(r.result.success);
        all_pairs.push_back(std::move(p));
        all_wins.push_back(r.result.success);
        loops += r.result.loop_flag ? 1 : 0;
    }
    auto cell = [](std::vector<ActionPair> const & ps, std::vector<bool> const & ws) {
        MetricCell c;
        c.episodes = static_cast<int>(ps.size());
        c.ams = compute_ams(ps);
        c.sr = compute_sr(ws);
        return c;
    };
    for (auto const & [cat, ps] : pairs) {
        report.per_category[cat] = cell(ps, wins[cat]);
    }
    if (all_pairs.empty()) {
        report.overall = {};
        report.loop_rate = 0.0;
        return;
    }
    report.overall = cell(all_pairs, all_wins);
    report.loop_rate = static_cast<double>(loops) / static_cast<double>(report.records.size());
}

std::vector<EvalReport> run_benchmark(
    std::span<Scenario const> scenarios,
    KnowledgeBase const * kb,
    BackendSpec const & backend,
    std::span<RunConfig const> configs,
    BenchmarkOptions const & opts)
{
    if (opts.workers < 1) {
        throw InvalidArgument("workers must be >= 1");
    }
    std::vector<std::shared_ptr<Scenario const>> shared;
    shared.reserve(scenarios.size());
    for (auto const & s : scenarios) {
        shared.push_back(std::make_shared<Scenario const>(s));
    }

    auto run_one = [&](std::shared_ptr<Scenario const> const & sc, RunConfig const & cfg) {
        EpisodeRecord rec;
        rec.scenario_id = sc->scenario_id;
        rec.category = sc->category;
        rec.gold = sc->gold_path;
        EnvHandle env(sc);
        try {
            auto spec = backend;
            spec.faults.seed = opts.seed;
            auto be = spec.make(env);
            rec.result = run_episode(env, *be, kb, sc->goal, cfg);
        } catch (Error const & ex) {
            rec.result.scenario_id = sc->scenario_id;
            rec.result.query = sc->goal;
            rec.result.ablation = cfg.ablation;
            rec.result.cause = ex.what();
        }
        rec.match_fraction = step_match_fraction(rec.result.predicted_actions, rec.gold);
        return rec;
    };

    std::vector<EvalReport> reports;
    for (auto const & cfg : configs) {
        cfg.validate();
        EvalReport report;
        report.config = cfg;
        report.backend = backend.describe();
        report.seed = opts.seed;
        report.records.resize(shared.size());

        auto const workers = std::min<std::size_t>(static_cast<std::size_t>(opts.workers), shared.size());
        if (workers <= 1) {
            for (std::size_t i = 0; i < shared.size(); ++i) {
                report.records[i] = run_one(shared[i], cfg);
            }
        } else {
            std::vector<std::future<void>> jobs;
            for (std::size_t w = 0; w < workers; ++w) {
                jobs.push_back(std::async(std::launch::async, [&, w] {
                    for (std::size_t i = w; i < shared.size(); i += workers) {
                        report.records[i] = run_one(shared[i], cfg);
                    }
                }));
            }
            for (auto & j : jobs) {
                j.get();
            }
        }
        summarize(report);
        reports.push_back(std::move(report));
    }
    return reports;
}

// ---------------------------------------------------------------------------

void to_json(json & j, EvalReport const & r)
{
    json per_category = json::object();
    for (auto const & [cat, c] : r.per_category) {
        per_category[std::string(to_string(cat))] = cell_json(c);
    }
    json episodes = json::array();
    for (auto const & rec : r.records) {
        json gold = json::array();
        for (auto const & a : rec.gold) {
            gold.push_back(render_action(a));
        }
        episodes.push_back({
            {"scenario_id", rec.scenario_id},
            {"category", to_string(rec.category)},
            {"gold", std::move(gold)},
            {"match_fraction", rec.match_fraction},
            {"result", rec.result},
        });
    }
    j = json{
        {"v", kSchemaVersion},
        {"config",
         {{"ablation", to_string(r.config.ablation)},
          {"max_retries", r.config.max_retries},
          {"max_steps", r.config.max_steps},
          {"k_traces", r.config.k_traces},
          {"context_budget", r.config.context_budget},
          {"loop_threshold", r.config.loop_threshold},
          {"backend", r.backend},
          {"seed", r.seed}}},
        {"per_category", std::move(per_category)},
        {"overall", cell_json(r.overall)},
        {"loop_rate", r.loop_rate},
        {"episodes", std::move(episodes)},
    };
}

std::string render_table(std::span<EvalReport const> reports)
{
    constexpr std::size_t label_w = 10;
    constexpr std::size_t col_w = 14;
    std::string out = pad("Mode", label_w);
    for (auto c : kAllCategories) {
        out += pad(column_name(c), col_w);
    }
    out += pad("Overall", col_w) + "\n";
    out += pad("", label_w);
    for (std::size_t i = 0; i < std::size(kAllCategories) + 1; ++i) {
        out += pad("AMS    SR", col_w);
    }
    out += "\n";
    for (auto const & r : reports) {
        out += pad(std::string(to_string(r.config.ablation)), label_w);
        auto fmt = [](MetricCell const & c) { return pad(pct(c.ams), 5) + " " + pad(pct(c.sr), 5); };
        for (auto c : kAllCategories) {
            auto it = r.per_category.find(c);
            out += pad(it == r.per_category.end() ? std::string("-") : fmt(it->second), col_w);
        }
        out += pad(r.overall.episodes ? fmt(r.overall) : std::string("-"), col_w) + "\n";
    }
    return out;
}

} // namespace flowpilot
