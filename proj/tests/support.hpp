#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ranctl/ransim.hpp"
#include "ranctl/telemetry.hpp"
#include "ranctl/xapp_common.hpp"

namespace testkit {

using namespace ranctl;

inline CellAggregate cell_agg(double prb, bool active = true) {
    CellAggregate c;
    c.has_data = true;
    c.active = active;
    c.prb_dl_mean = prb;
    c.prb_dl_max = prb;
    return c;
}

inline UeAggregate ue_agg(CellId serving, double dl, double sinr, Seconds dwell = 10.0) {
    UeAggregate u;
    u.has_data = true;
    u.serving_cell = serving;
    u.pdcp_dl_mean = dl;
    u.sched_dl_mean = dl * 4.0 + 1.0;
    u.sinr_median = sinr;
    u.prb_share_mean = 0.1;
    u.dwell_s = dwell;
    return u;
}

// Nine cells on three sites with the default neighbour lists.
inline CellTopology grid_topology() {
    Simulator sim(ScenarioConfig{});
    CellTopology t;
    for (const auto& c : sim.cells()) {
        t.site_of[c.id] = c.site;
        t.neighbors[c.id] = sim.neighbors(c.id);
    }
    return t;
}

// Fully connected cells, all on distinct sites.
inline CellTopology full_topology(int n) {
    CellTopology t;
    for (int a = 1; a <= n; ++a) {
        t.site_of[a] = a;
        for (int b = 1; b <= n; ++b)
            if (a != b) t.neighbors[a].push_back(b);
    }
    return t;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ranctl_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testkit
