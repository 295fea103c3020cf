#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ranctl/apt.hpp"
#include "ranctl/audit.hpp"
#include "ranctl/config.hpp"
#include "ranctl/metrics.hpp"
#include "ranctl/orchestrator.hpp"

namespace ranctl {

struct RunArtifacts {
    std::string kpi_csv;  // exact bytes of kpi.csv
    std::vector<KpiSample> samples;
    Summary summary;
    std::vector<AuditRecord> audit;
    TickStats stats;
    std::uint64_t batches{0};
    std::uint64_t apt_cycles{0};
    std::vector<TunerEdit> apt_edits;
    std::vector<TtlRevert> ttl_reverts;
};

struct RunHooks {
    IntentProvider* provider{nullptr};  // replaces the configured provider
    std::function<void(Seconds, const DispatchBatch&, const PolicyStore&)> on_batch;
};

// Full co-scheduled run: each second the simulator advances, telemetry
// ingests, the orchestrator ticks and its batch is actuated (E2 then O1),
// then APT runs if due. With a non-empty out_dir the artifacts are written
// there (kpi.csv, summary.csv, audit.log, config.json). A directory that
// already holds a run with the same seed is refused unless `force`.
RunArtifacts run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir = {}, bool force = false,
                            const RunHooks& hooks = {});

// Re-drives the simulator from the dispatch records alone. Throws GuardError
// when the log's seed or scenario digest differs from cfg.
RunArtifacts replay_log(const std::vector<AuditRecord>& log, const RunConfig& cfg);

// Loads run_dir/config.json and run_dir/audit.log; a seed override makes the
// mismatch check meaningful from the command line.
RunArtifacts replay_run(const std::filesystem::path& run_dir, std::optional<std::uint64_t> seed = std::nullopt);

// Throws GuardError unless both runs share scenario digest and seed.
std::vector<MetricDelta> compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

struct SweepRow {
    std::string phase;
    std::string metric;
    double baseline_median{0.0}, baseline_min{0.0}, baseline_max{0.0};
    double agentic_median{0.0}, agentic_min{0.0}, agentic_max{0.0};
    double delta_median{0.0};  // median over seeds of (agentic - baseline)
};

struct SweepResult {
    std::vector<std::uint64_t> seeds;
    std::vector<Summary> baseline;
    std::vector<Summary> agentic;
    std::vector<SweepRow> rows;
};

// Runs baseline and agentic for each seed, sequentially. With an out_dir the
// runs land in out_dir/seed_<n>/<controller> and the table in sweep.csv.
SweepResult sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                  const std::filesystem::path& out_dir = {}, bool force = false);

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& file);

double median_of(std::vector<double> v);

}  // namespace ranctl
