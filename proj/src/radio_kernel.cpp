#include "ranctl/radio_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ranctl {

void LinkMatrices::resize(int ues, int cells) {
    n_ues = ues;
    n_cells = cells;
    const auto n = static_cast<std::size_t>(ues) * static_cast<std::size_t>(cells);
    rsrp_dbm.assign(n, 0.0);
    sinr_db.assign(n, 0.0);
    rsrq_db.assign(n, 0.0);
}

double antenna_gain_db(double off_deg, const RadioParams& p) {
    double a = std::fmod(std::abs(off_deg), 360.0);
    if (a > 180.0) a = 360.0 - a;
    const double r = a / p.beamwidth_deg;
    return -std::min(12.0 * r * r, p.front_back_db);
}

double pathloss_db(double distance_m, const RadioParams& p) {
    const double d_km = std::max(distance_m, p.min_distance_m) / 1000.0;
    return p.pathloss_a_db + 10.0 * p.pathloss_exponent * std::log10(d_km);
}

namespace {

void check(const LinkInputs& in) {
    const std::size_t nc = in.cells.size();
    if (in.active.size() != nc || in.ue_x.size() != in.ue_y.size() ||
        in.shadow_db.size() != in.ue_x.size() * nc)
        throw std::invalid_argument("link budget: inconsistent input sizes");
}

// One UE row. Shared by both entry points so they cannot drift apart.
void compute_row(const LinkInputs& in, const RadioParams& p, std::size_t u, LinkMatrices& out) {
    const std::size_t nc = in.cells.size();
    const std::size_t base = u * nc;
    const double noise_mw = std::pow(10.0, p.noise_dbm / 10.0);
    double total_mw = noise_mw;
    for (std::size_t c = 0; c < nc; ++c) {
        const CellGeometry& g = in.cells[c];
        const double dx = in.ue_x[u] - g.x;
        const double dy = in.ue_y[u] - g.y;
        const double bearing = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
        const double rx = g.tx_dbm + antenna_gain_db(bearing - g.azimuth_deg, p) -
                          pathloss_db(std::hypot(dx, dy), p) - in.shadow_db[base + c];
        out.rsrp_dbm[base + c] = rx;
        if (in.active[c]) total_mw += std::pow(10.0, rx / 10.0);
    }
    for (std::size_t c = 0; c < nc; ++c) {
        const double s = std::pow(10.0, out.rsrp_dbm[base + c] / 10.0);
        const double others = in.active[c] ? total_mw - s : total_mw;
        const double wideband = in.active[c] ? total_mw : total_mw + s;
        out.sinr_db[base + c] = 10.0 * std::log10(s / std::max(others, noise_mw));
        const double q = 10.0 * std::log10(s / wideband) - 3.0;
        out.rsrq_db[base + c] = std::clamp(q, p.rsrq_floor_db, p.rsrq_ceil_db);
    }
}

}  // namespace

void link_budget_serial(const LinkInputs& in, const RadioParams& p, LinkMatrices& out) {
    check(in);
    const auto n_ues = in.ue_x.size();
    out.resize(static_cast<int>(n_ues), static_cast<int>(in.cells.size()));
    for (std::size_t u = 0; u < n_ues; ++u) compute_row(in, p, u, out);
}

void link_budget_parallel(const LinkInputs& in, const RadioParams& p, LinkMatrices& out) {
    check(in);
    const auto n_ues = static_cast<long>(in.ue_x.size());
    out.resize(static_cast<int>(n_ues), static_cast<int>(in.cells.size()));
#pragma omp parallel for schedule(static) if (n_ues >= 256)
    for (long u = 0; u < n_ues; ++u) compute_row(in, p, static_cast<std::size_t>(u), out);
}

}  // namespace ranctl
