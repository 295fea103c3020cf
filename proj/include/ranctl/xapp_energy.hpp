#pragma once

#include <vector>

#include "ranctl/actions.hpp"
#include "ranctl/policy.hpp"
#include "ranctl/telemetry.hpp"
#include "ranctl/xapp_common.hpp"

namespace ranctl {

struct IdleAssessment {
    CellId cell{-1};
    Seconds window_s{0.0};
    bool observed{false};  // the full window is covered by samples
    bool prb_ok{false};
    bool sched_ok{false};
    bool ue_ok{false};
    bool ho_ok{false};
    bool idle{false};
};

struct EnergyOptions {
    double cluster_prb_high{0.7};  // same-site mean PRB that wakes a sleeping cell
    Seconds sleep_cooldown_s{60.0};
};

// Expects a view over idle_window_min * 60 s; a shorter view or a window not
// fully observed is never idle.
IdleAssessment assess_idle(CellId cell, const KpiView& view, const EnergyPolicy& policy);

bool wake_condition(CellId cell, const KpiView& view, const EnergyPolicy& policy, const CellTopology* topology,
                    const EnergyOptions& options);

std::vector<ActionProposal> energy_tick(const KpiView& view, const EnergyPolicy& policy, const XappContext& ctx,
                                        const EnergyOptions& options = {});

}  // namespace ranctl
