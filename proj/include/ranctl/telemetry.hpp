#pragma once

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ranctl/actions.hpp"
#include "ranctl/common.hpp"

namespace ranctl {

enum class HoCause { Native, XApp, Reattach };

std::string_view to_string(HoCause cause);

struct HoEvent {
    CellId from{-1};
    CellId to{-1};
    UeId ue{-1};
    HoCause cause{HoCause::Native};
    Seconds t{0.0};  // when the handover took effect
};

// One neighbour measurement as reported by the UE.
struct NeighborMeasurement {
    CellId cell{-1};
    double rsrp_dbm{0.0};
    double rsrq_db{0.0};
    double sinr_db{0.0};  // SINR the UE would see if served by this cell
};

// A per-cell sample has no ue_id; a per-UE sample carries the serving cell in
// cell_id. sched_dl_mbps is DL traffic offered to the scheduler.
struct KpiSample {
    Seconds t{0.0};
    Phase phase{Phase::Normal};
    CellId cell_id{-1};
    std::optional<UeId> ue_id;
    double prb_dl{0.0};
    double pdcp_dl_mbps{0.0};
    double pdcp_ul_mbps{0.0};
    double sched_dl_mbps{0.0};
    double sinr_db{0.0};
    double rsrp_dbm{0.0};
    double rsrq_db{0.0};
    int mcs{0};
    double ul_interf_dbm{0.0};
    int attached_ue_count{0};
    std::optional<HoEvent> ho_event;
    // Extensions used by the control loop.
    double dwell_s{0.0};
    bool cell_active{true};
    int pending_ue_count{0};
    double pending_sched_dl_mbps{0.0};
    std::vector<NeighborMeasurement> neighbors;
};

struct CellAggregate {
    bool has_data{false};
    bool active{true};
    double prb_dl_mean{0.0};
    double prb_dl_max{0.0};
    double sched_dl_mean{0.0};
    double sched_dl_max{0.0};
    int ue_count{0};
    int ue_count_max{0};
    double ho_arrival_hz{0.0};
    std::optional<double> mcs_p50;
    std::optional<double> ul_p95_dbm;
    Seconds observed_s{0.0};
    int pending_ue_count{0};
    double pending_sched_dl_mbps{0.0};
    std::optional<Seconds> last_sleep_t;
    std::optional<Seconds> last_wake_t;
};

struct UeAggregate {
    bool has_data{false};
    CellId serving_cell{-1};
    double pdcp_dl_mean{0.0};
    double sched_dl_mean{0.0};  // offered DL
    double sinr_median{0.0};
    double prb_share_mean{0.0};
    Seconds dwell_s{0.0};
    std::optional<Seconds> last_ho_t;
    std::optional<Seconds> last_native_ho_t;
    std::optional<Seconds> last_xapp_ho_t;
    std::vector<NeighborMeasurement> neighbors;
};

struct KpiView {
    Seconds now{0.0};
    Seconds window_s{0.0};
    std::map<CellId, CellAggregate> cells;
    std::map<UeId, UeAggregate> ues;

    bool no_data() const;
};

struct TelemetryConfig {
    Seconds qoe_window_s{5.0};
    Seconds load_window_s{30.0};
    Seconds energy_window_s{300.0};
    Seconds retention_s{600.0};
    Seconds sample_interval_s{1.0};
};

// Nearest-rank percentile: ascending sort, 1-based index ceil(q*n) clamped to [1, n].
double percentile(std::vector<double> values, double q);

enum class EffectSign { Improved, Worsened, Neutral };

std::string_view to_string(EffectSign s);

struct OutcomeSnapshot {
    Seconds t{0.0};
    std::map<std::string, double> metrics;
};

struct ActionOutcomeEntry {
    ActionProposal action;
    Seconds t_action{0.0};
    OutcomeSnapshot pre;
    OutcomeSnapshot post;
    std::map<std::string, EffectSign> effect;
};

struct ParamHistoryEntry {
    Seconds t{0.0};
    double old_value{0.0};
    double new_value{0.0};
    std::string source;
    std::string reason;
};

class ParamHistory {
public:
    void record(const std::string& field, ParamHistoryEntry entry) { entries_[field].push_back(std::move(entry)); }
    const std::vector<ParamHistoryEntry>& entries(const std::string& field) const;
    const std::map<std::string, std::vector<ParamHistoryEntry>>& all() const { return entries_; }

private:
    std::map<std::string, std::vector<ParamHistoryEntry>> entries_;
};

class Telemetry;

// Dispatched actions awaiting or holding their sign-test outcome.
class OutcomeLog {
public:
    explicit OutcomeLog(Seconds default_lag_s = 10.0, double dead_band = 0.05)
        : lag_s_(default_lag_s), dead_band_(dead_band) {}

    void track(const ActionProposal& action, Seconds t_action);

    // Throws Error for unknown actions or when now < t_action + lag.
    ActionOutcomeEntry log_outcome(std::uint64_t action_id, Seconds lag_s, Seconds now, const Telemetry& tel);

    // Resolves every tracked action whose lag has elapsed.
    void resolve_due(Seconds now, const Telemetry& tel);

    const std::vector<ActionOutcomeEntry>& resolved() const { return resolved_; }
    std::span<const std::pair<ActionProposal, Seconds>> tracked() const { return tracked_; }
    Seconds lag_s() const { return lag_s_; }

private:
    Seconds lag_s_;
    double dead_band_;
    std::vector<std::pair<ActionProposal, Seconds>> tracked_;
    std::vector<std::uint64_t> resolved_ids_;
    std::vector<ActionOutcomeEntry> resolved_;
};

class Telemetry {
public:
    explicit Telemetry(TelemetryConfig cfg = {});

    // Throws Error on time regression within a stream or out-of-range values.
    void ingest(const KpiSample& sample);

    KpiView view(Agent agent, Seconds now) const;
    KpiView view_window(Seconds now, Seconds window_s) const;
    Seconds window_for(Agent agent) const;

    // Handovers recorded within the retention horizon, oldest first.
    const std::deque<HoEvent>& handovers() const { return hos_; }
    std::size_t retained_samples() const;
    std::optional<Seconds> last_t() const { return last_t_; }

    OutcomeLog& outcomes() { return outcomes_; }
    const OutcomeLog& outcomes() const { return outcomes_; }
    ParamHistory& params() { return params_; }
    const ParamHistory& params() const { return params_; }
    const TelemetryConfig& config() const { return cfg_; }
    // Sleep/wake transitions for a cell as (t, active), oldest first.
    std::vector<std::pair<Seconds, bool>> transitions(CellId cell) const;

private:
    struct UeState {
        Seconds dwell{0.0};
        Seconds last_t{0.0};
    };
    struct CellTransition {
        Seconds t;
        bool active;
    };

    void prune(Seconds now);

    TelemetryConfig cfg_;
    std::map<CellId, std::deque<KpiSample>> cell_streams_;
    std::map<UeId, std::deque<KpiSample>> ue_streams_;
    std::map<UeId, UeState> ue_state_;
    std::map<CellId, std::vector<CellTransition>> cell_transitions_;
    std::deque<HoEvent> hos_;
    std::optional<Seconds> last_t_;
    OutcomeLog outcomes_;
    ParamHistory params_;
};

// kpi.csv: one row per sample. Cell rows leave ue_id empty.
void write_kpi_csv_header(std::ostream& out);
void write_kpi_csv_row(std::ostream& out, const KpiSample& s);

}  // namespace ranctl
