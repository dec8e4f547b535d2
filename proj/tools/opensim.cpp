/*
 * Copyright 2026 The opensim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "opensim/balancer.hpp"
#include "opensim/metrics.hpp"
#include "opensim/scenario.hpp"
#include "opensim/world.hpp"

namespace fs = std::filesystem;
using namespace opensim;
using namespace opensim::harness;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct RunArgs {
    std::string scenario;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int runs = 1;
    std::string out = ".";
    bool trace = false;
    std::string mode;
    std::string strategy;
    std::string balancer;
};

std::ofstream open_out(const fs::path& p)
{
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw MetricsError(MetricsErrorKind::IoError, "cannot write " + p.string());
    return f;
}

// Command-line overrides are applied before validation so that a preset can be
// rerun under another mode or selection policy.
ScenarioConfig prepare(const RunArgs& a)
{
    ScenarioConfig cfg = load_scenario(a.scenario);
    if (!a.mode.empty()) {
        auto m = run_mode_from_string(a.mode);
        if (!m)
            throw ScenarioError(ErrorKind::ParseError, "unknown mode '" + a.mode + "'");
        cfg.mode = *m;
    }
    if (!a.strategy.empty()) {
        auto s = ctl::strategy_from_string(a.strategy);
        if (!s)
            throw ScenarioError(ErrorKind::ParseError, "unknown strategy '" + a.strategy + "'");
        cfg.strategy = *s;
    }
    if (!a.balancer.empty()) {
        auto b = lb::algorithm_from_string(a.balancer);
        if (!b)
            throw ScenarioError(ErrorKind::ParseError, "unknown balancer algorithm '" + a.balancer + "'");
        cfg.balancer = *b;
    }
    validate(cfg);
    return cfg;
}

int run_command(const RunArgs& a)
{
    ScenarioConfig cfg;
    try {
        cfg = prepare(a);
    } catch (const ScenarioError& e) {
        fmt::print(std::cerr, "opensim: {}\n", e.what());
        return kConfigError;
    }
    if (a.runs < 1) {
        fmt::print(std::cerr, "opensim: --runs must be at least 1\n");
        return kConfigError;
    }
    const std::uint64_t seed = a.seed_set ? a.seed : cfg.seed;

    try {
        fs::create_directories(a.out);
        const fs::path out(a.out);
        std::vector<SummaryStats> summaries;
        for (int i = 0; i < a.runs; ++i) {
            const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
            std::ofstream trace;
            RunOptions opts;
            // time series and the trace come from the first seed only
            if (a.trace && i == 0) {
                trace = open_out(out / "trace.log");
                opts.trace = &trace;
            }
            RunResult r = run_scenario(cfg, s, opts);
            if (i == 0) {
                emit_metrics(r.rows, (out / "metrics.csv").string());
                auto sys = open_out(out / "system.csv");
                emit_system(r.system, sys);
                if (cfg.mode == RunMode::Nfv) {
                    auto orch = open_out(out / "orchestration.csv");
                    emit_orchestration(r.orchestration, orch);
                }
            }
            const auto& c = r.calls;
            fmt::print("seed {}: generated {} completed {} rejected {} dropped {} open {} setup {:.2f} ms events {}\n", s,
                       c.generated, c.completed, c.rejected, c.dropped, c.in_progress, c.mean_setup_ms(), r.events);
            if (!r.rows.empty())
                summaries.push_back(compute_summary(r.rows));
        }
        auto summary = open_out(out / "summary.csv");
        if (!summaries.empty())
            emit_summary(average_summaries(summaries), summary);
        else
            emit_summary({}, summary);
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "opensim: {}\n", e.what());
        return kRuntimeError;
    }
    return 0;
}

int validate_command(const std::string& scenario, bool print)
{
    try {
        ScenarioConfig cfg = load_scenario(scenario);
        if (print)
            std::cout << print_scenario(cfg);
        else
            fmt::print("{}: ok ({} mode, {} proxies, {} s)\n", cfg.name, to_string(cfg.mode), cfg.proxies.size(),
                       cfg.duration_s);
    } catch (const ScenarioError& e) {
        fmt::print(std::cerr, "opensim: {}\n", e.what());
        return kConfigError;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"SIP over SDN/NFV discrete-event simulator"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "run a scenario (preset name or file)");
    run->add_option("scenario", ra.scenario)->required();
    run->add_option("--seed", ra.seed, "seed of the first run (default: the scenario's)")
        ->each([&](const std::string&) { ra.seed_set = true; });
    run->add_option("--runs", ra.runs, "runs over consecutive seeds; summaries are averaged");
    run->add_option("--out", ra.out, "output directory");
    run->add_flag("--trace", ra.trace, "write trace.log");
    run->add_option("--mode", ra.mode, "override mode: partial|full|nfv|baseline");
    run->add_option("--strategy", ra.strategy, "override proxy selection: minload|roundrobin|random|firstfit");
    run->add_option("--balancer", ra.balancer, "override baseline algorithm: tlwl|fwar|hwar");

    std::string vscenario;
    bool vprint = false;
    auto* val = app.add_subcommand("validate", "parse and validate a scenario");
    val->add_option("scenario", vscenario)->required();
    val->add_flag("--print", vprint, "print the canonical form");

    app.add_subcommand("presets", "list bundled presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    if (*run)
        return run_command(ra);
    if (*val)
        return validate_command(vscenario, vprint);
    for (const auto& n : preset_names())
        fmt::print("{}\n", n);
    return 0;
}
