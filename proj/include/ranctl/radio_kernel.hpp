#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ranctl {

struct CellGeometry {
    double x{0.0};
    double y{0.0};
    double azimuth_deg{0.0};  // boresight, counter-clockwise from +x
    double tx_dbm{46.0};
};

struct RadioParams {
    double pathloss_a_db{128.1};        // loss at 1 km
    double pathloss_exponent{3.5};
    double min_distance_m{35.0};
    double noise_dbm{-95.0};
    double beamwidth_deg{70.0};          // 3 dB beamwidth of the sector pattern
    double front_back_db{20.0};
    double rsrq_floor_db{-19.5};
    double rsrq_ceil_db{-3.0};
};

// Row-major [ue][cell] link matrices.
struct LinkMatrices {
    int n_ues{0};
    int n_cells{0};
    std::vector<double> rsrp_dbm;
    std::vector<double> sinr_db;  // SINR the UE would see if served by this cell
    std::vector<double> rsrq_db;

    void resize(int ues, int cells);
    double rsrp(int ue, int cell) const { return rsrp_dbm[static_cast<std::size_t>(ue) * n_cells + cell]; }
    double sinr(int ue, int cell) const { return sinr_db[static_cast<std::size_t>(ue) * n_cells + cell]; }
    double rsrq(int ue, int cell) const { return rsrq_db[static_cast<std::size_t>(ue) * n_cells + cell]; }
};

struct LinkInputs {
    std::span<const CellGeometry> cells;
    std::span<const std::uint8_t> active;  // per cell; inactive cells add no interference
    std::span<const double> ue_x;
    std::span<const double> ue_y;
    std::span<const double> shadow_db;  // [ue][cell]
};

double antenna_gain_db(double angle_off_boresight_deg, const RadioParams& p);
double pathloss_db(double distance_m, const RadioParams& p);

// Reference implementation.
void link_budget_serial(const LinkInputs& in, const RadioParams& p, LinkMatrices& out);

// OpenMP over UEs. Each row is computed exactly as in the serial version, so
// results are bitwise identical for any thread count.
void link_budget_parallel(const LinkInputs& in, const RadioParams& p, LinkMatrices& out);

}  // namespace ranctl
