#include "ranctl/ransim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace ranctl {

TopologyConfig TopologyConfig::three_site_grid() {
    TopologyConfig t;
    t.sites = {
        {0.0, 0.0, {90.0, 210.0, 330.0}},
        {500.0, 0.0, {30.0, 270.0, 150.0}},
        {250.0, 433.0, {30.0, 150.0, 270.0}},
    };
    return t;
}

std::vector<PhaseSpan> ScenarioConfig::default_phases(Seconds duration) {
    const Seconds third = duration / 3.0;
    return {{Phase::Normal, 0.0, third}, {Phase::Emergency, third, 2 * third}, {Phase::Recovery, 2 * third, duration}};
}

int ScenarioConfig::cell_count() const {
    int n = 0;
    for (const auto& s : topology.sites) n += static_cast<int>(s.azimuths_deg.size());
    return n;
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& what) { throw ParseError("scenario: " + what); };
    if (!(duration_s > 0.0) || std::fmod(duration_s, 1.0) != 0.0) fail("duration_s must be a positive whole number");
    if (phases.empty()) fail("phase schedule is empty");
    Seconds cursor = 0.0;
    for (const auto& p : phases) {
        if (p.start != cursor) fail(fmt::format("phase '{}' starts at {} but previous ends at {}", to_string(p.phase), p.start, cursor));
        if (!(p.end > p.start)) fail(fmt::format("phase '{}' is empty", to_string(p.phase)));
        cursor = p.end;
    }
    if (cursor != duration_s) fail("phases do not cover [0, duration_s]");
    if (surge.multiplier < 1.0) fail("surge multiplier must be >= 1");
    if (n_ues <= 0) fail("n_ues must be positive");
    if (topology.sites.empty()) fail("topology has no sites");
    for (const auto& s : topology.sites)
        if (s.azimuths_deg.empty()) fail("site without cells");
    const int nc = cell_count();
    for (CellId c : incident_cells)
        if (c < 1 || c > nc) fail(fmt::format("incident cell {} does not exist", c));
    if (!(shadowing_sigma_db >= 0.0)) fail("shadowing sigma must be >= 0");
    if (!(offset_clamp_db > 0.0)) fail("offset clamp must be positive");
    if (min_active_cells_per_site < 1) fail("min_active_cells_per_site must be >= 1");
    if (topology.capacity_mbps <= 0.0) fail("capacity must be positive");
    if (topology.area_width_m <= 0.0 || topology.area_height_m <= 0.0) fail("area must be positive");
    if (traffic.embb_rate_max_mbps < traffic.embb_rate_min_mbps) fail("embb rate range inverted");
    if (traffic.embb_idle_max_mbps < traffic.embb_idle_min_mbps || traffic.embb_idle_min_mbps < 0.0)
        fail("embb idle rate range invalid");
    if (traffic.embb_on_mean_s <= 0.0 || traffic.embb_off_mean_s <= 0.0) fail("embb durations must be positive");
    if (mobility.vehicular_fraction < 0.0 || mobility.vehicular_fraction > 1.0) fail("vehicular fraction outside [0,1]");
    if (native_ho.a2_period_ms <= 0 || native_ho.a4_period_ms <= 0) fail("HO periods must be positive");
}

Phase ScenarioConfig::phase_at(Seconds t) const {
    if (!(t >= 0.0 && t <= duration_s)) throw Error(fmt::format("phase_at: t={} outside [0, {}]", t, duration_s));
    for (const auto& p : phases)
        if (t >= p.start && t < p.end) return p.phase;
    return phases.back().phase;
}

namespace {

// Spectral efficiency per MCS index.
double se_of(int mcs) { return 0.15 + 0.19 * mcs; }

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::int64_t exp_ms(std::mt19937_64& rng, Seconds mean) {
    std::exponential_distribution<double> d(1.0 / mean);
    return std::max<std::int64_t>(Simulator::kStepMs, static_cast<std::int64_t>(std::llround(d(rng) * 1000.0)));
}

bool crossed(std::int64_t now_ms, int period_ms) {
    return now_ms / period_ms != (now_ms - Simulator::kStepMs) / period_ms;
}

}  // namespace

bool a2_entered(double serving_rsrq_db, const NativeHoConfig& cfg) { return serving_rsrq_db < cfg.a2_threshold_db(); }

int a4_pick(double serving_rsrq_db, std::span<const double> scores, const NativeHoConfig& cfg) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (scores[c] > best_score) {
            best_score = scores[c];
            best = static_cast<int>(c);
        }
    }
    return best >= 0 && best_score > serving_rsrq_db + cfg.hysteresis_db() ? best : -1;
}

Simulator::Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.phases.empty()) cfg_.phases = ScenarioConfig::default_phases(cfg_.duration_s);
    cfg_.validate();

    const auto& topo = cfg_.topology;
    double cx = 0.0, cy = 0.0;
    for (std::size_t s = 0; s < topo.sites.size(); ++s) {
        const auto& site = topo.sites[s];
        cx += site.x;
        cy += site.y;
        for (double az : site.azimuths_deg) {
            Cell c;
            c.id = static_cast<CellId>(cells_.size()) + 1;
            c.site = static_cast<SiteId>(s);
            c.x = site.x;
            c.y = site.y;
            c.azimuth_deg = az;
            c.tx_power_dbm = topo.tx_power_dbm;
            c.capacity_mbps = topo.capacity_mbps;
            cells_.push_back(c);
            geometry_.push_back({c.x, c.y, az, c.tx_power_dbm});
        }
    }
    cx /= static_cast<double>(topo.sites.size());
    cy /= static_cast<double>(topo.sites.size());
    area_x0_ = cx - topo.area_width_m / 2.0;
    area_y0_ = cy - topo.area_height_m / 2.0;

    const std::size_t nc = cells_.size();
    neighbors_.resize(nc);
    for (std::size_t a = 0; a < nc; ++a) {
        const double ra = cells_[a].azimuth_deg * std::numbers::pi / 180.0;
        const double ax = cells_[a].x + topo.coverage_reach_m * std::cos(ra);
        const double ay = cells_[a].y + topo.coverage_reach_m * std::sin(ra);
        for (std::size_t b = 0; b < nc; ++b) {
            if (a == b) continue;
            const double rb = cells_[b].azimuth_deg * std::numbers::pi / 180.0;
            const double bx = cells_[b].x + topo.coverage_reach_m * std::cos(rb);
            const double by = cells_[b].y + topo.coverage_reach_m * std::sin(rb);
            if (cells_[a].site == cells_[b].site || std::hypot(ax - bx, ay - by) <= topo.neighbor_distance_m)
                neighbors_[a].push_back(cells_[b].id);
        }
    }
    offsets_.assign(nc * nc, 0.0);
    for (auto* v : {&step_prb_, &sum_prb_, &sum_dl_, &sum_ul_, &sum_sched_}) v->assign(nc, 0.0);

    const auto n = static_cast<std::size_t>(cfg_.n_ues);
    shadow_.resize(n * nc);
    auto shadow_rng = make_rng(cfg_.seed, 1);
    std::normal_distribution<double> shadow_dist(0.0, 1.0);
    for (double& s : shadow_) s = cfg_.shadowing_sigma_db * shadow_dist(shadow_rng);

    const auto n_veh = static_cast<std::size_t>(std::llround(cfg_.mobility.vehicular_fraction * static_cast<double>(n)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        Ue u;
        u.id = static_cast<UeId>(i) + 1;
        UeDynamics d;
        d.rng = make_rng(cfg_.seed, 100 + i);
        const double r = topo.ue_spawn_radius_m * std::sqrt(unit(d.rng));
        const double phi = 2.0 * std::numbers::pi * unit(d.rng);
        u.x = std::clamp(cx + r * std::cos(phi), area_x0_, area_x0_ + topo.area_width_m);
        u.y = std::clamp(cy + r * std::sin(phi), area_y0_, area_y0_ + topo.area_height_m);
        // Every third UE is vehicular so the split does not depend on draw order.
        u.mobility = (n_veh > 0 && i % 3 == 2 && (i / 3) < n_veh) ? MobilityKind::VehicularReversal
                                                                  : MobilityKind::RandomDirection;
        const double heading = 2.0 * std::numbers::pi * unit(d.rng);
        if (u.mobility == MobilityKind::VehicularReversal) {
            std::uniform_real_distribution<double> sp(cfg_.mobility.veh_speed_min_mps, cfg_.mobility.veh_speed_max_mps);
            d.speed = sp(d.rng);
            d.next_turn_ms = static_cast<std::int64_t>(std::llround(cfg_.mobility.veh_reversal_s * 1000.0 * (0.5 + unit(d.rng)))) / kStepMs * kStepMs;
        } else {
            std::uniform_real_distribution<double> sp(cfg_.mobility.ped_speed_min_mps, cfg_.mobility.ped_speed_max_mps);
            d.speed = sp(d.rng);
            d.next_turn_ms = exp_ms(d.rng, cfg_.mobility.ped_turn_mean_s);
        }
        u.vx = d.speed * std::cos(heading);
        u.vy = d.speed * std::sin(heading);
        const double p_on = cfg_.traffic.embb_on_mean_s / (cfg_.traffic.embb_on_mean_s + cfg_.traffic.embb_off_mean_s);
        d.embb_on = unit(d.rng) < p_on;
        std::uniform_real_distribution<double> rate(cfg_.traffic.embb_rate_min_mbps, cfg_.traffic.embb_rate_max_mbps);
        std::uniform_real_distribution<double> idle(cfg_.traffic.embb_idle_min_mbps, cfg_.traffic.embb_idle_max_mbps);
        d.embb_rate = d.embb_on ? rate(d.rng) : idle(d.rng);
        d.embb_switch_ms = exp_ms(d.rng, d.embb_on ? cfg_.traffic.embb_on_mean_s : cfg_.traffic.embb_off_mean_s);
        d.mmtc_next_ms = exp_ms(d.rng, cfg_.traffic.mmtc_period_mean_s);
        ues_.push_back(u);
        dyn_.push_back(std::move(d));
    }

    recompute_links();
    for (std::size_t i = 0; i < n; ++i) ues_[i].serving = best_active_cell(i);
    update_traffic();
    allocate();
}

std::size_t Simulator::cell_index(CellId id) const {
    if (id < 1 || static_cast<std::size_t>(id) > cells_.size()) throw Error(fmt::format("sim: unknown cell {}", id));
    return static_cast<std::size_t>(id - 1);
}

std::size_t Simulator::ue_index(UeId id) const {
    if (id < 1 || static_cast<std::size_t>(id) > ues_.size()) throw Error(fmt::format("sim: unknown ue {}", id));
    return static_cast<std::size_t>(id - 1);
}

const Cell& Simulator::cell(CellId id) const { return cells_[cell_index(id)]; }
const Ue& Simulator::ue(UeId id) const { return ues_[ue_index(id)]; }
const std::vector<CellId>& Simulator::neighbors(CellId id) const { return neighbors_[cell_index(id)]; }

double Simulator::offset_db(CellId a, CellId b) const {
    return offsets_[cell_index(a) * cells_.size() + cell_index(b)];
}

int Simulator::active_cells_at_site(SiteId site) const {
    int n = 0;
    for (const auto& c : cells_)
        if (c.site == site && c.active) ++n;
    return n;
}

std::vector<HoEvent> Simulator::take_events() {
    std::vector<HoEvent> out;
    out.swap(events_);
    return out;
}

void Simulator::move_ues(double dt) {
    const double x1 = area_x0_ + cfg_.topology.area_width_m;
    const double y1 = area_y0_ + cfg_.topology.area_height_m;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        Ue& u = ues_[i];
        UeDynamics& d = dyn_[i];
        if (now_ms_ >= d.next_turn_ms) {
            if (u.mobility == MobilityKind::VehicularReversal) {
                u.vx = -u.vx;
                u.vy = -u.vy;
                d.next_turn_ms += static_cast<std::int64_t>(std::llround(cfg_.mobility.veh_reversal_s * 1000.0));
            } else {
                const double heading = 2.0 * std::numbers::pi * unit(d.rng);
                u.vx = d.speed * std::cos(heading);
                u.vy = d.speed * std::sin(heading);
                d.next_turn_ms = now_ms_ + exp_ms(d.rng, cfg_.mobility.ped_turn_mean_s);
            }
        }
        u.x += u.vx * dt;
        u.y += u.vy * dt;
        if (u.x < area_x0_) { u.x = 2 * area_x0_ - u.x; u.vx = -u.vx; }
        if (u.x > x1) { u.x = 2 * x1 - u.x; u.vx = -u.vx; }
        if (u.y < area_y0_) { u.y = 2 * area_y0_ - u.y; u.vy = -u.vy; }
        if (u.y > y1) { u.y = 2 * y1 - u.y; u.vy = -u.vy; }
    }
}

void Simulator::update_traffic() {
    const auto& tr = cfg_.traffic;
    const bool surge = cfg_.phase_at(std::min(now(), cfg_.duration_s)) == Phase::Emergency;
    std::uniform_real_distribution<double> rate(tr.embb_rate_min_mbps, tr.embb_rate_max_mbps);
    std::uniform_real_distribution<double> idle(tr.embb_idle_min_mbps, tr.embb_idle_max_mbps);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        Ue& u = ues_[i];
        UeDynamics& d = dyn_[i];
        while (now_ms_ >= d.embb_switch_ms) {
            d.embb_on = !d.embb_on;
            d.embb_rate = d.embb_on ? rate(d.rng) : idle(d.rng);
            d.embb_switch_ms += exp_ms(d.rng, d.embb_on ? tr.embb_on_mean_s : tr.embb_off_mean_s);
        }
        double dl = d.embb_rate + tr.urllc_dl_mbps;
        if (surge && std::hypot(u.x - cfg_.surge.zone_x_m, u.y - cfg_.surge.zone_y_m) <= cfg_.surge.zone_radius_m)
            dl *= cfg_.surge.multiplier;
        u.demand_dl_mbps = dl;

        if (u.mobility == MobilityKind::VehicularReversal) {
            u.demand_ul_mbps = tr.v2x_ul_mbps;
        } else {
            if (now_ms_ >= d.mmtc_next_ms) {
                d.mmtc_until_ms = now_ms_ + 1000;
                d.mmtc_next_ms = now_ms_ + exp_ms(d.rng, tr.mmtc_period_mean_s);
            }
            u.demand_ul_mbps = now_ms_ < d.mmtc_until_ms ? tr.mmtc_ul_mbps : 0.0;
        }
    }
}

void Simulator::recompute_links() {
    std::vector<double> xs(ues_.size()), ys(ues_.size());
    std::vector<std::uint8_t> active(cells_.size());
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        xs[i] = ues_[i].x;
        ys[i] = ues_[i].y;
    }
    for (std::size_t c = 0; c < cells_.size(); ++c) active[c] = cells_[c].active ? 1 : 0;
    LinkInputs in{geometry_, active, xs, ys, shadow_};
    if (cfg_.parallel_kernel)
        link_budget_parallel(in, cfg_.radio, links_);
    else
        link_budget_serial(in, cfg_.radio, links_);
}

CellId Simulator::best_active_cell(std::size_t ue) const {
    CellId best = -1;
    double best_rsrp = -1e300;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        if (!cells_[c].active) continue;
        const double r = links_.rsrp(static_cast<int>(ue), static_cast<int>(c));
        if (r > best_rsrp) {
            best_rsrp = r;
            best = cells_[c].id;
        }
    }
    return best;
}

void Simulator::handover(std::size_t i, CellId target, HoCause cause) {
    Ue& u = ues_[i];
    HoEvent ev{u.serving, target, u.id, cause, now()};
    u.serving = target;
    u.dwell_s = 0.0;
    dyn_[i].a2_armed = false;
    dyn_[i].last_ho = ev;
    events_.push_back(ev);
}

void Simulator::native_ho_checks(bool a2_due, bool a4_due) {
    const int nc = static_cast<int>(cells_.size());
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        UeDynamics& d = dyn_[i];
        const int ui = static_cast<int>(i);
        const auto s = cell_index(ues_[i].serving);
        // A hold protects an xApp handover from being undone, not a UE that
        // has lost service.
        if (now_ms_ < d.native_hold_until_ms && links_.sinr(ui, static_cast<int>(s)) >= cfg_.min_sinr_db) continue;
        const double serving_rsrq = links_.rsrq(ui, static_cast<int>(s));
        if (a2_due) d.a2_armed = a2_entered(serving_rsrq, cfg_.native_ho);
        if (!a4_due || !d.a2_armed) continue;
        std::vector<double> score(cells_.size(), -std::numeric_limits<double>::infinity());
        for (int c = 0; c < nc; ++c)
            if (c != static_cast<int>(s) && cells_[c].active) score[c] = links_.rsrq(ui, c) + offsets_[s * cells_.size() + c];
        const int best = a4_pick(serving_rsrq, score, cfg_.native_ho);
        if (best >= 0) handover(i, cells_[best].id, HoCause::Native);
    }
}

void Simulator::allocate() {
    std::vector<double> load(cells_.size(), 0.0);
    std::vector<double> peak(ues_.size(), 0.0);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        Ue& u = ues_[i];
        const auto c = cell_index(u.serving);
        const double sinr = links_.sinr(static_cast<int>(i), static_cast<int>(c));
        if (sinr < cfg_.min_sinr_db) {
            u.mcs = 0;
            continue;
        }
        const double se = 0.75 * std::log2(1.0 + std::pow(10.0, sinr / 10.0));
        u.mcs = std::clamp(static_cast<int>(std::floor((se - se_of(0)) / 0.19)), 0, 28);
        peak[i] = cells_[c].capacity_mbps * se_of(u.mcs) / se_of(28);
        load[c] += u.demand_dl_mbps / peak[i];
    }
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        Ue& u = ues_[i];
        const auto c = cell_index(u.serving);
        const double scale = load[c] > 1.0 ? 1.0 / load[c] : 1.0;
        if (peak[i] > 0.0) {
            const double f = u.demand_dl_mbps / peak[i];
            u.prb_share = f * scale;
            u.dl_mbps = peak[i] * u.prb_share;
            u.ul_mbps = u.demand_ul_mbps;
        } else {
            u.prb_share = 0.0;
            u.dl_mbps = 0.0;
            u.ul_mbps = 0.0;
        }
    }
    for (std::size_t c = 0; c < cells_.size(); ++c) step_prb_[c] = std::min(1.0, load[c]);
}

double Simulator::ul_interference_dbm(std::size_t c) const {
    constexpr double kUlNoiseDbm = -105.0;
    if (!cells_[c].active) return kUlNoiseDbm;
    double mw = dbm_to_mw(kUlNoiseDbm);
    const double ref = std::max(cfg_.traffic.v2x_ul_mbps, 1e-9);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        if (ues_[i].serving == cells_[c].id || ues_[i].demand_ul_mbps <= 0.0) continue;
        const double activity = std::min(1.0, ues_[i].demand_ul_mbps / ref);
        const double coupling = links_.rsrp(static_cast<int>(i), static_cast<int>(c)) - cells_[c].tx_power_dbm;
        mw += activity * dbm_to_mw(cfg_.topology.ue_tx_power_dbm + coupling);
    }
    return 10.0 * std::log10(mw);
}

std::vector<KpiSample> Simulator::step() {
    if (finished()) throw Error("sim: stepping past the end of the scenario");
    now_ms_ += kStepMs;
    const double dt = kStepMs / 1000.0;
    move_ues(dt);
    update_traffic();
    recompute_links();
    for (auto& u : ues_) u.dwell_s += dt;
    native_ho_checks(crossed(now_ms_, cfg_.native_ho.a2_period_ms), crossed(now_ms_, cfg_.native_ho.a4_period_ms));
    allocate();

    std::vector<double> cell_dl(cells_.size(), 0.0), cell_ul(cells_.size(), 0.0), cell_sched(cells_.size(), 0.0);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        const Ue& u = ues_[i];
        UeDynamics& d = dyn_[i];
        d.acc_dl += u.dl_mbps;
        d.acc_ul += u.ul_mbps;
        d.acc_sched += u.demand_dl_mbps;
        d.acc_prb += u.prb_share;
        const auto c = cell_index(u.serving);
        cell_dl[c] += u.dl_mbps;
        cell_ul[c] += u.ul_mbps;
        cell_sched[c] += u.demand_dl_mbps;
    }
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        sum_prb_[c] += step_prb_[c];
        sum_dl_[c] += cell_dl[c];
        sum_ul_[c] += cell_ul[c];
        sum_sched_[c] += cell_sched[c];
    }
    ++steps_in_second_;
    if (now_ms_ % 1000 != 0) return {};
    return emit_samples();
}

std::vector<KpiSample> Simulator::advance_second() {
    std::vector<KpiSample> out;
    do {
        out = step();
    } while (now_ms_ % 1000 != 0);
    return out;
}

std::vector<KpiSample> Simulator::emit_samples() {
    const Seconds t = now();
    const Phase phase = cfg_.phase_at(t);
    const double n = static_cast<double>(steps_in_second_);
    const std::size_t nc = cells_.size();
    std::vector<KpiSample> out;
    out.reserve(nc + ues_.size());

    std::vector<std::vector<std::size_t>> attached(nc);
    std::vector<int> pending(nc, 0);
    std::vector<double> pending_dl(nc, 0.0);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        attached[cell_index(ues_[i].serving)].push_back(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < nc; ++c)
            if (links_.rsrp(static_cast<int>(i), static_cast<int>(c)) > links_.rsrp(static_cast<int>(i), static_cast<int>(best)))
                best = c;
        if (!cells_[best].active) {
            ++pending[best];
            pending_dl[best] += ues_[i].demand_dl_mbps;
        }
    }
    std::vector<double> interf(nc);
    for (std::size_t c = 0; c < nc; ++c) interf[c] = ul_interference_dbm(c);

    for (std::size_t c = 0; c < nc; ++c) {
        KpiSample s;
        s.t = t;
        s.phase = phase;
        s.cell_id = cells_[c].id;
        s.cell_active = cells_[c].active;
        s.prb_dl = std::min(1.0, sum_prb_[c] / n);
        s.pdcp_dl_mbps = sum_dl_[c] / n;
        s.pdcp_ul_mbps = sum_ul_[c] / n;
        s.sched_dl_mbps = sum_sched_[c] / n;
        s.ul_interf_dbm = interf[c];
        s.attached_ue_count = static_cast<int>(attached[c].size());
        s.pending_ue_count = pending[c];
        s.pending_sched_dl_mbps = pending_dl[c];
        if (!attached[c].empty()) {
            std::vector<double> mcs;
            double sinr = 0.0, rsrp = 0.0, rsrq = 0.0;
            for (std::size_t i : attached[c]) {
                sinr += links_.sinr(static_cast<int>(i), static_cast<int>(c));
                rsrp += links_.rsrp(static_cast<int>(i), static_cast<int>(c));
                rsrq += links_.rsrq(static_cast<int>(i), static_cast<int>(c));
                mcs.push_back(ues_[i].mcs);
            }
            const double k = static_cast<double>(attached[c].size());
            s.sinr_db = sinr / k;
            s.rsrp_dbm = rsrp / k;
            s.rsrq_db = rsrq / k;
            s.mcs = static_cast<int>(percentile(mcs, 0.5));
        }
        out.push_back(std::move(s));
    }

    for (std::size_t i = 0; i < ues_.size(); ++i) {
        const Ue& u = ues_[i];
        UeDynamics& d = dyn_[i];
        const auto c = cell_index(u.serving);
        const int ui = static_cast<int>(i);
        KpiSample s;
        s.t = t;
        s.phase = phase;
        s.cell_id = u.serving;
        s.ue_id = u.id;
        s.prb_dl = std::clamp(d.acc_prb / n, 0.0, 1.0);
        s.pdcp_dl_mbps = d.acc_dl / n;
        s.pdcp_ul_mbps = d.acc_ul / n;
        s.sched_dl_mbps = d.acc_sched / n;
        s.sinr_db = links_.sinr(ui, static_cast<int>(c));
        s.rsrp_dbm = links_.rsrp(ui, static_cast<int>(c));
        s.rsrq_db = links_.rsrq(ui, static_cast<int>(c));
        s.mcs = u.mcs;
        s.ul_interf_dbm = interf[c];
        s.attached_ue_count = static_cast<int>(attached[c].size());
        s.ho_event = d.last_ho;
        s.dwell_s = u.dwell_s;
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < nc; ++k)
            if (k != c && cells_[k].active) order.push_back(k);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return links_.rsrp(ui, static_cast<int>(a)) > links_.rsrp(ui, static_cast<int>(b));
        });
        if (order.size() > 6) order.resize(6);
        for (std::size_t k : order)
            s.neighbors.push_back({cells_[k].id, links_.rsrp(ui, static_cast<int>(k)), links_.rsrq(ui, static_cast<int>(k)),
                                   links_.sinr(ui, static_cast<int>(k))});
        out.push_back(std::move(s));
        d.last_ho.reset();
        d.acc_dl = d.acc_ul = d.acc_sched = d.acc_prb = 0.0;
    }
    std::fill(sum_prb_.begin(), sum_prb_.end(), 0.0);
    std::fill(sum_dl_.begin(), sum_dl_.end(), 0.0);
    std::fill(sum_ul_.begin(), sum_ul_.end(), 0.0);
    std::fill(sum_sched_.begin(), sum_sched_.end(), 0.0);
    steps_in_second_ = 0;
    return out;
}

ActuationResult Simulator::apply_ho(UeId ue_id, CellId target, Seconds native_hold_s) {
    if (ue_id < 1 || static_cast<std::size_t>(ue_id) > ues_.size()) return {false, "unknown-ue", 0.0};
    if (target < 1 || static_cast<std::size_t>(target) > cells_.size()) return {false, "unknown-cell", 0.0};
    const auto i = ue_index(ue_id);
    if (ues_[i].serving == target) return {false, "no-op", 0.0};
    if (!cells_[cell_index(target)].active) return {false, "target-sleeping", 0.0};
    handover(i, target, HoCause::XApp);
    dyn_[i].native_hold_until_ms = now_ms_ + static_cast<std::int64_t>(std::llround(native_hold_s * 1000.0));
    return {true, {}, 0.0};
}

ActuationResult Simulator::apply_offset(CellId cell_id, CellId neighbor, double step_db) {
    if (cell_id < 1 || static_cast<std::size_t>(cell_id) > cells_.size() || neighbor < 1 ||
        static_cast<std::size_t>(neighbor) > cells_.size() || cell_id == neighbor)
        return {false, "unknown-cell", 0.0};
    double& off = offsets_[cell_index(cell_id) * cells_.size() + cell_index(neighbor)];
    off = std::clamp(off + step_db, -cfg_.offset_clamp_db, cfg_.offset_clamp_db);
    return {true, {}, off};
}

ActuationResult Simulator::set_cell_state(CellId cell_id, bool sleep) {
    if (cell_id < 1 || static_cast<std::size_t>(cell_id) > cells_.size()) return {false, "unknown-cell", 0.0};
    Cell& c = cells_[cell_index(cell_id)];
    if (sleep) {
        if (!c.active) return {false, "no-op", 0.0};
        if (active_cells_at_site(c.site) - 1 < cfg_.min_active_cells_per_site) return {false, "min-active", 0.0};
        c.active = false;
        recompute_links();
        for (std::size_t i = 0; i < ues_.size(); ++i)
            if (ues_[i].serving == cell_id) handover(i, best_active_cell(i), HoCause::Reattach);
    } else {
        if (c.active) return {false, "no-op", 0.0};
        c.active = true;
        recompute_links();
    }
    return {true, {}, 0.0};
}

}  // namespace ranctl
