#include "ranctl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ranctl/ransim.hpp"

namespace ranctl {

namespace {

namespace fs = std::filesystem;

CellTopology topology_of(const Simulator& sim) {
    CellTopology t;
    for (const auto& c : sim.cells()) {
        t.site_of[c.id] = c.site;
        t.neighbors[c.id] = sim.neighbors(c.id);
    }
    return t;
}

Seconds phase_end(const ScenarioConfig& s, Seconds t) {
    for (const auto& p : s.phases)
        if (t >= p.start && t < p.end) return p.end;
    return s.duration_s;
}

ActuationResult actuate(Simulator& sim, const DispatchedAction& d) {
    const ActionProposal& p = d.proposal;
    switch (p.kind) {
        case ActionKind::Ho: return sim.apply_ho(p.ue, p.target, d.hold_s);
        case ActionKind::OffsetStep: return sim.apply_offset(p.cell, p.target, d.step_db);
        case ActionKind::Sleep: return sim.set_cell_state(p.cell, true);
        case ActionKind::Wake: return sim.set_cell_state(p.cell, false);
    }
    return {};
}

void audit_actuation(AuditLog& audit, Seconds now, const DispatchedAction& d, const ActuationResult& r) {
    Json p;
    Json a = action_to_json(d.proposal);
    if (d.proposal.kind == ActionKind::OffsetStep) a["step_db"] = d.step_db;
    p["action"] = a;
    p["result"] = r.applied ? "applied" : "refused";
    if (!r.applied) p["refused"] = r.reason;
    if (d.proposal.kind == ActionKind::OffsetStep) p["value"] = r.value;
    audit.append(now, AuditSource::Sim, AuditKind::Actuation, p);
}

void audit_sim_events(AuditLog& audit, Seconds now, const std::vector<HoEvent>& events) {
    for (const auto& e : events) {
        if (e.cause == HoCause::XApp) continue;
        Json p;
        p["event"] = e.cause == HoCause::Native ? "native_ho" : "reattach";
        p["action"] = {{"kind", "ho"}, {"ue", e.ue}, {"cell", e.from}, {"target", e.to}};
        p["t_event"] = e.t;
        audit.append(now, AuditSource::Sim, AuditKind::Actuation, p);
    }
}

Json run_meta(const RunConfig& cfg) {
    Json p;
    p["seed"] = cfg.scenario.seed;
    p["scenario_digest"] = fmt::format("{:016x}", scenario_digest(cfg));
    p["controller"] = std::string(to_string(cfg.controller));
    p["duration_s"] = cfg.scenario.duration_s;
    return p;
}

void check_collision(const fs::path& out_dir, const RunConfig& cfg, bool force) {
    const fs::path existing = out_dir / "config.json";
    if (force || !fs::exists(existing)) return;
    try {
        const RunConfig prev = load_config(existing);
        if (prev.scenario.seed == cfg.scenario.seed)
            throw GuardError(fmt::format("{} already holds a run with seed {} (use --force to overwrite)",
                                         out_dir.string(), cfg.scenario.seed));
    } catch (const ParseError&) {
        throw GuardError(fmt::format("{} holds an unreadable config.json (use --force to overwrite)", out_dir.string()));
    }
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    out << text;
    if (!out) throw StorageError("cannot write " + file.string());
}

}  // namespace

RunArtifacts run_experiment(const RunConfig& cfg, const fs::path& out_dir, bool force, const RunHooks& hooks) {
    cfg.validate();
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw StorageError(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
        check_collision(out_dir, cfg, force);
        save_config(cfg, out_dir / "config.json");
    }

    RunArtifacts art;
    AuditLog audit = out_dir.empty() ? AuditLog() : AuditLog(out_dir / "audit.log");
    Simulator sim(cfg.scenario);
    TelemetryConfig tcfg = cfg.telemetry;
    Telemetry tel(tcfg);
    tel.outcomes() = OutcomeLog(cfg.outcome_lag_s, cfg.outcome_dead_band);
    PolicyStore store(catalog_registry(), cfg.guardrails, &audit);

    audit.append(0.0, AuditSource::Dispatcher, AuditKind::RunMeta, run_meta(cfg), "run");

    std::unique_ptr<IntentProvider> owned;
    std::unique_ptr<Orchestrator> orch;
    std::unique_ptr<Apt> apt;
    if (cfg.controller == Controller::Agentic) {
        IntentProvider* provider = hooks.provider;
        if (!provider) {
            owned = make_provider(cfg.provider.kind, cfg.provider.stub_latency_ms);
            provider = owned.get();
        }
        OrchestratorConfig ocfg = cfg.orchestrator;
        ocfg.qoe_window_s = cfg.telemetry.qoe_window_s;
        ocfg.load_window_s = cfg.telemetry.load_window_s;
        orch = std::make_unique<Orchestrator>(ocfg, store, tel, topology_of(sim), &audit, provider,
                                              cfg.scenario.seed);
        AptConfig acfg = cfg.apt;
        acfg.load_window_s = cfg.telemetry.load_window_s;
        apt = std::make_unique<Apt>(acfg, store, tel, &audit);
    }

    std::ostringstream kpi;
    write_kpi_csv_header(kpi);
    while (!sim.finished()) {
        auto samples = sim.advance_second();
        const Seconds now = sim.now();
        audit_sim_events(audit, now, sim.take_events());
        for (const auto& s : samples) {
            tel.ingest(s);
            write_kpi_csv_row(kpi, s);
        }
        art.samples.insert(art.samples.end(), samples.begin(), samples.end());
        if (!orch) continue;

        for (auto& r : store.expire(now)) art.ttl_reverts.push_back(std::move(r));
        const Phase phase = sim.phase_at(now);
        const DispatchBatch batch = orch->tick(now, phase);
        ++art.batches;
        for (const auto* plane : {&batch.e2_actions, &batch.o1_actions})
            for (const auto& d : *plane) {
                const ActuationResult r = actuate(sim, d);
                audit_actuation(audit, now, d, r);
                if (r.applied) tel.outcomes().track(d.proposal, now);
            }
        if (hooks.on_batch) hooks.on_batch(now, batch, store);
        tel.outcomes().resolve_due(now, tel);
        if (!cfg.orchestrator.frozen(now)) apt->maybe_cycle(now, phase, phase_end(sim.config(), now));
    }

    art.kpi_csv = kpi.str();
    art.summary = summarize(art.samples, cfg.scenario.incident_cells);
    art.audit = audit.records();
    if (orch) art.stats = orch->stats();
    if (apt) {
        art.apt_cycles = apt->cycles();
        art.apt_edits = apt->edits();
    }
    if (!out_dir.empty()) {
        write_text(out_dir / "kpi.csv", art.kpi_csv);
        write_summary_csv(art.summary, out_dir / "summary.csv");
    }
    return art;
}

RunArtifacts replay_log(const std::vector<AuditRecord>& log, const RunConfig& cfg) {
    cfg.validate();
    auto meta = std::find_if(log.begin(), log.end(), [](const AuditRecord& r) { return r.kind == AuditKind::RunMeta; });
    if (meta == log.end()) throw GuardError("replay: audit log has no run_meta record");
    const auto seed = meta->payload.value("seed", std::uint64_t{0});
    if (seed != cfg.scenario.seed)
        throw GuardError(fmt::format("replay: log seed {} does not match config seed {}", seed, cfg.scenario.seed));
    const std::string digest = fmt::format("{:016x}", scenario_digest(cfg));
    if (meta->payload.value("scenario_digest", std::string()) != digest)
        throw GuardError("replay: scenario digest differs from the recorded run");

    // Dispatch payloads keyed by tick (ms).
    std::map<std::int64_t, std::vector<const Json*>> dispatches;
    for (const auto& r : log)
        if (r.kind == AuditKind::Dispatch) dispatches[std::llround(r.t * 1000.0)].push_back(&r.payload);

    RunArtifacts art;
    Simulator sim(cfg.scenario);
    std::ostringstream kpi;
    write_kpi_csv_header(kpi);
    while (!sim.finished()) {
        auto samples = sim.advance_second();
        sim.take_events();
        for (const auto& s : samples) write_kpi_csv_row(kpi, s);
        art.samples.insert(art.samples.end(), samples.begin(), samples.end());
        auto it = dispatches.find(sim.now_ms());
        if (it == dispatches.end()) continue;
        for (const Json* payload : it->second)
            for (const char* plane : {"e2", "o1"})
                for (const auto& a : payload->value(plane, Json::array())) {
                    DispatchedAction d{action_from_json(a), a.value("step_db", 0.0), a.value("hold_s", 0.0)};
                    actuate(sim, d);
                }
    }
    art.kpi_csv = kpi.str();
    art.summary = summarize(art.samples, cfg.scenario.incident_cells);
    return art;
}

RunArtifacts replay_run(const fs::path& run_dir, std::optional<std::uint64_t> seed) {
    RunConfig cfg = load_config(run_dir / "config.json");
    if (seed) cfg.scenario.seed = *seed;
    return replay_log(AuditLog::load(run_dir / "audit.log"), cfg);
}

std::vector<MetricDelta> compare_runs(const fs::path& a, const fs::path& b) {
    const RunConfig ca = load_config(a / "config.json");
    const RunConfig cb = load_config(b / "config.json");
    if (ca.scenario.seed != cb.scenario.seed)
        throw GuardError(fmt::format("compare: seeds differ ({} vs {})", ca.scenario.seed, cb.scenario.seed));
    if (scenario_digest(ca) != scenario_digest(cb)) throw GuardError("compare: runs use different scenarios");
    return compare_summaries(read_summary_csv(a / "summary.csv"), read_summary_csv(b / "summary.csv"));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    for (double x : v)
        if (std::isnan(x)) return x;
    return percentile(std::move(v), 0.5);
}

SweepResult sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, const fs::path& out_dir, bool force) {
    if (seeds.empty()) throw ParseError("sweep: at least one seed is required");
    SweepResult res;
    res.seeds = seeds;
    for (std::uint64_t seed : seeds) {
        for (Controller c : {Controller::Baseline, Controller::Agentic}) {
            RunConfig rc = cfg;
            rc.scenario.seed = seed;
            rc.controller = c;
            const fs::path dir =
                out_dir.empty() ? fs::path() : out_dir / fmt::format("seed_{}", seed) / std::string(to_string(c));
            auto art = run_experiment(rc, dir, force);
            (c == Controller::Baseline ? res.baseline : res.agentic).push_back(std::move(art.summary));
        }
    }
    for (const auto& [phase, metrics] : res.baseline.front()) {
        for (const auto& [metric, unused] : metrics) {
            std::vector<double> b, a, d;
            for (std::size_t i = 0; i < seeds.size(); ++i) {
                const double vb = res.baseline[i].at(phase).at(metric);
                const double va = res.agentic[i].at(phase).at(metric);
                b.push_back(vb);
                a.push_back(va);
                d.push_back(va == vb ? 0.0 : va - vb);
            }
            SweepRow row;
            row.phase = phase;
            row.metric = metric;
            row.baseline_median = median_of(b);
            row.baseline_min = *std::min_element(b.begin(), b.end());
            row.baseline_max = *std::max_element(b.begin(), b.end());
            row.agentic_median = median_of(a);
            row.agentic_min = *std::min_element(a.begin(), a.end());
            row.agentic_max = *std::max_element(a.begin(), a.end());
            row.delta_median = median_of(d);
            res.rows.push_back(row);
        }
    }
    if (!out_dir.empty()) write_sweep_csv(res, out_dir / "sweep.csv");
    return res;
}

void write_sweep_csv(const SweepResult& r, const fs::path& file) {
    std::ofstream out(file);
    out << "phase,metric,baseline_median,baseline_min,baseline_max,agentic_median,agentic_min,agentic_max,"
           "delta_median\n";
    for (const auto& row : r.rows)
        fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", row.phase, row.metric, row.baseline_median, row.baseline_min,
                   row.baseline_max, row.agentic_median, row.agentic_min, row.agentic_max, row.delta_median);
    if (!out) throw StorageError("cannot write " + file.string());
}

}  // namespace ranctl
