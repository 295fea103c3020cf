// ranctl: run, replay, compare, sweep and explain experiments.
//
// Exit codes: 0 ok, 1 other failure, 2 parse/config error, 3 guard refusal
// (seed collision, mismatched runs, replay divergence), 4 storage failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ranctl/config.hpp"
#include "ranctl/runner.hpp"

namespace fs = std::filesystem;
using namespace ranctl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitGuard = 3;
constexpr int kExitStorage = 4;

RunConfig scenario_or_default(const std::string& path) {
    if (path.empty()) return RunConfig{};
    if (!fs::exists(path)) throw ParseError(fmt::format("{}: no such scenario file", path));
    return load_config(path);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StorageError(fmt::format("{}: cannot read", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ParseError(fmt::format("--seeds: '{}' is not a seed", item));
        seeds.push_back(v);
    }
    if (seeds.empty()) throw ParseError("--seeds: need at least one seed");
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agentic RAN control experiments"};
    app.require_subcommand(1);

    std::string scenario, controller = "agentic", out, provider;
    std::optional<std::uint64_t> seed;
    bool force = false;
    double provider_latency = -1.0;
    auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
    run->add_option("--scenario", scenario, "Scenario/config JSON file (defaults when omitted)");
    run->add_option("--controller", controller, "baseline | agentic")->check(CLI::IsMember({"baseline", "agentic"}));
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out, "Run directory")->required();
    run->add_flag("--force", force, "Overwrite a run with the same seed");
    run->add_option("--provider", provider, "stub | timeout | invalid | http");
    run->add_option("--provider-latency-ms", provider_latency, "Stub provider latency");

    std::string run_dir, replay_out;
    std::optional<std::uint64_t> replay_seed;
    auto* replay = app.add_subcommand("replay", "Re-drive a run from its audit log and check kpi.csv");
    replay->add_option("--run-dir", run_dir, "Run directory")->required();
    replay->add_option("--seed", replay_seed, "Seed to replay with (must match the log)");
    replay->add_option("--out", replay_out, "Write the replayed kpi.csv here");

    std::string run_a, run_b;
    auto* compare = app.add_subcommand("compare", "Per-phase metric deltas between two runs (b - a)");
    compare->add_option("--a", run_a, "First run directory")->required();
    compare->add_option("--b", run_b, "Second run directory")->required();

    std::string sweep_scenario, seeds_text = "1,2,3", sweep_out;
    bool sweep_force = false;
    auto* sw = app.add_subcommand("sweep", "Baseline and agentic over several seeds");
    sw->add_option("--scenario", sweep_scenario, "Scenario/config JSON file");
    sw->add_option("--seeds", seeds_text, "Comma-separated seeds");
    sw->add_option("--out", sweep_out, "Output directory")->required();
    sw->add_flag("--force", sweep_force, "Overwrite existing runs");

    std::string explain_dir, subject;
    auto* ex = app.add_subcommand("explain", "Decision trace for ue<N>, cell<N> or a policy field");
    ex->add_option("--run-dir", explain_dir, "Run directory")->required();
    ex->add_option("--subject", subject, "ue5, cell3, cio_step_db, ...")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitParse;
    }

    try {
        if (*run) {
            RunConfig cfg = scenario_or_default(scenario);
            cfg.controller = controller_from_string(controller);
            if (seed) cfg.scenario.seed = *seed;
            if (!provider.empty()) cfg.provider.kind = provider;
            if (provider_latency >= 0.0) cfg.provider.stub_latency_ms = provider_latency;
            cfg.validate();
            const auto art = run_experiment(cfg, out, force);
            fmt::print("run: {} seed {} -> {} ({} batches, {} audit records)\n", to_string(cfg.controller),
                       cfg.scenario.seed, out, art.batches, art.audit.size());
        } else if (*replay) {
            const auto art = replay_run(run_dir, replay_seed);
            if (!replay_out.empty()) {
                std::ofstream f(replay_out, std::ios::binary);
                f << art.kpi_csv;
                if (!f) throw StorageError(fmt::format("{}: write failed", replay_out));
            }
            const std::string original = read_file(fs::path(run_dir) / "kpi.csv");
            if (original != art.kpi_csv) {
                fmt::print(stderr, "replay: kpi.csv differs from {}\n", run_dir);
                return kExitGuard;
            }
            fmt::print("replay: kpi.csv identical ({} bytes)\n", original.size());
        } else if (*compare) {
            fmt::print("phase,metric,a,b,delta\n");
            for (const auto& d : compare_runs(run_a, run_b))
                fmt::print("{},{},{},{},{}\n", d.phase, d.metric, d.a, d.b, d.delta);
        } else if (*sw) {
            RunConfig cfg = scenario_or_default(sweep_scenario);
            cfg.validate();
            const auto res = sweep(cfg, parse_seeds(seeds_text), sweep_out, sweep_force);
            fmt::print("{}\n", read_file(fs::path(sweep_out) / "sweep.csv"));
            fmt::print("sweep: {} seeds, {} rows\n", res.seeds.size(), res.rows.size());
        } else if (*ex) {
            const auto log = AuditLog::load(fs::path(explain_dir) / "audit.log");
            const auto trace = explain(log, subject);
            if (trace.empty()) fmt::print("no decisions for {}\n", subject);
            for (const auto& line : trace) fmt::print("{}\n", line);
        }
    } catch (const ParseError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitParse;
    } catch (const GuardError& e) {
        fmt::print(stderr, "refused: {}\n", e.what());
        return kExitGuard;
    } catch (const StorageError& e) {
        fmt::print(stderr, "storage: {}\n", e.what());
        return kExitStorage;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitError;
    }
    return kExitOk;
}
