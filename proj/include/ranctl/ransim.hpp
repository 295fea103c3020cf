#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ranctl/common.hpp"
#include "ranctl/radio_kernel.hpp"
#include "ranctl/telemetry.hpp"

namespace ranctl {

struct PhaseSpan {
    Phase phase{Phase::Normal};
    Seconds start{0.0};
    Seconds end{0.0};
};

struct SiteConfig {
    double x{0.0};
    double y{0.0};
    std::vector<double> azimuths_deg;  // one cell per entry, numbered in site order
};

struct TopologyConfig {
    std::vector<SiteConfig> sites;
    double area_width_m{1500.0};
    double area_height_m{1500.0};
    double tx_power_dbm{46.0};
    double ue_tx_power_dbm{23.0};
    double capacity_mbps{30.0};
    // Cells are neighbours when on the same site or when their coverage
    // centroids (site + reach along boresight) lie within neighbor_distance_m.
    double coverage_reach_m{250.0};
    double neighbor_distance_m{450.0};
    // UEs start uniformly inside this disk around the site centroid and then
    // roam the full area.
    double ue_spawn_radius_m{500.0};

    static TopologyConfig three_site_grid();
};

struct TrafficConfig {
    double embb_rate_min_mbps{0.8};
    double embb_rate_max_mbps{2.5};
    // Between bursts the eMBB flow keeps a background rate.
    double embb_idle_min_mbps{0.15};
    double embb_idle_max_mbps{0.45};
    Seconds embb_on_mean_s{10.0};
    Seconds embb_off_mean_s{5.0};
    double urllc_dl_mbps{0.12};
    double v2x_ul_mbps{0.2};
    double mmtc_ul_mbps{0.1};
    Seconds mmtc_period_mean_s{30.0};
};

struct MobilityConfig {
    double vehicular_fraction{1.0 / 3.0};
    double ped_speed_min_mps{0.5};
    double ped_speed_max_mps{1.5};
    Seconds ped_turn_mean_s{30.0};
    double veh_speed_min_mps{10.0};
    double veh_speed_max_mps{15.0};
    Seconds veh_reversal_s{20.0};
};

struct SurgeConfig {
    double zone_x_m{250.0};
    double zone_y_m{144.0};
    double zone_radius_m{300.0};
    double multiplier{4.0};
};

struct NativeHoConfig {
    int serving_threshold_index{28};  // RSRQ index; dB = -19.5 + 0.5 * index
    int neighbor_offset_index{1};     // dB = 0.5 * index
    int a2_period_ms{240};
    int a4_period_ms{480};

    double a2_threshold_db() const { return -19.5 + 0.5 * serving_threshold_index; }
    double hysteresis_db() const { return 0.5 * neighbor_offset_index; }
};

// A2: serving RSRQ below the threshold arms the UE.
bool a2_entered(double serving_rsrq_db, const NativeHoConfig& cfg);
// A4: the best offset-biased neighbour score, if it beats the serving RSRQ by
// more than the hysteresis. Ineligible cells carry -inf. Returns an index or -1.
int a4_pick(double serving_rsrq_db, std::span<const double> scores, const NativeHoConfig& cfg);

struct ScenarioConfig {
    std::uint64_t seed{1};
    Seconds duration_s{300.0};
    std::vector<PhaseSpan> phases;
    std::set<CellId> incident_cells{1, 3, 9};
    int n_ues{20};
    double shadowing_sigma_db{6.0};
    double offset_clamp_db{6.0};
    int min_active_cells_per_site{1};
    bool parallel_kernel{true};
    double min_sinr_db{-6.5};  // below this a UE gets no service
    TopologyConfig topology = TopologyConfig::three_site_grid();
    TrafficConfig traffic;
    MobilityConfig mobility;
    SurgeConfig surge;
    NativeHoConfig native_ho;
    RadioParams radio;

    static std::vector<PhaseSpan> default_phases(Seconds duration = 300.0);
    // Throws ParseError naming the broken constraint.
    void validate() const;
    // Throws Error when t lies outside [0, duration].
    Phase phase_at(Seconds t) const;
    int cell_count() const;
};

enum class MobilityKind { RandomDirection, VehicularReversal };

struct Cell {
    CellId id{0};
    SiteId site{0};
    double x{0.0};
    double y{0.0};
    double azimuth_deg{0.0};
    double tx_power_dbm{46.0};
    double capacity_mbps{30.0};
    bool active{true};
};

struct Ue {
    UeId id{0};
    double x{0.0};
    double y{0.0};
    double vx{0.0};
    double vy{0.0};
    MobilityKind mobility{MobilityKind::RandomDirection};
    CellId serving{-1};
    Seconds dwell_s{0.0};
    double demand_dl_mbps{0.0};
    double demand_ul_mbps{0.0};
    // Throughput of the most recent step.
    double dl_mbps{0.0};
    double ul_mbps{0.0};
    double prb_share{0.0};
    int mcs{0};
};

struct ActuationResult {
    bool applied{false};
    std::string reason;  // named refusal when not applied
    double value{0.0};   // offsets: the offset after the step
};

// Flow-level simulator on a 100 ms grid. Samples are emitted on every 1 s
// boundary. Actions enter only through the apply_* / set_cell_state calls.
class Simulator {
public:
    static constexpr int kStepMs = 100;

    explicit Simulator(ScenarioConfig cfg);

    // One 100 ms step; returns samples when the step ends on a second boundary.
    std::vector<KpiSample> step();
    // Steps until the next second boundary.
    std::vector<KpiSample> advance_second();

    ActuationResult apply_ho(UeId ue, CellId target, Seconds native_hold_s = 0.0);
    ActuationResult apply_offset(CellId cell, CellId neighbor, double step_db);
    ActuationResult set_cell_state(CellId cell, bool sleep);

    Phase phase_at(Seconds t) const { return cfg_.phase_at(t); }
    Seconds now() const { return static_cast<double>(now_ms_) / 1000.0; }
    std::int64_t now_ms() const { return now_ms_; }
    bool finished() const { return now() >= cfg_.duration_s; }

    const ScenarioConfig& config() const { return cfg_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Ue>& ues() const { return ues_; }
    const Cell& cell(CellId id) const;
    const Ue& ue(UeId id) const;
    double offset_db(CellId cell, CellId neighbor) const;
    const std::vector<CellId>& neighbors(CellId cell) const;
    int active_cells_at_site(SiteId site) const;
    const LinkMatrices& links() const { return links_; }

    // Handovers (all causes) since the last call, oldest first.
    std::vector<HoEvent> take_events();

private:
    struct UeDynamics {
        std::mt19937_64 rng;
        double speed{0.0};
        std::int64_t next_turn_ms{0};
        bool embb_on{false};
        double embb_rate{0.0};
        std::int64_t embb_switch_ms{0};
        std::int64_t mmtc_next_ms{0};
        std::int64_t mmtc_until_ms{0};
        bool a2_armed{false};
        std::int64_t native_hold_until_ms{0};
        std::optional<HoEvent> last_ho;  // within the current sample second
        double acc_dl{0.0}, acc_ul{0.0}, acc_sched{0.0}, acc_prb{0.0};
    };

    std::size_t cell_index(CellId id) const;
    std::size_t ue_index(UeId id) const;
    void move_ues(double dt);
    void update_traffic();
    void recompute_links();
    void native_ho_checks(bool a2_due, bool a4_due);
    void allocate();
    double ul_interference_dbm(std::size_t cell) const;
    CellId best_active_cell(std::size_t ue) const;
    void handover(std::size_t ue, CellId target, HoCause cause);
    std::vector<KpiSample> emit_samples();

    ScenarioConfig cfg_;
    std::int64_t now_ms_{0};
    std::vector<Cell> cells_;
    std::vector<Ue> ues_;
    std::vector<UeDynamics> dyn_;
    std::vector<double> step_prb_;
    std::vector<double> sum_prb_, sum_dl_, sum_ul_, sum_sched_;  // over the current second
    int steps_in_second_{0};
    std::vector<std::vector<CellId>> neighbors_;
    std::vector<double> offsets_;  // [cell][neighbor]
    std::vector<double> shadow_;   // [ue][cell]
    std::vector<CellGeometry> geometry_;
    LinkMatrices links_;
    std::vector<HoEvent> events_;
    double area_x0_{0.0}, area_y0_{0.0};
};

}  // namespace ranctl
