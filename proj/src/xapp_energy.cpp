#include "ranctl/xapp_energy.hpp"

#include <fmt/format.h>

namespace ranctl {

IdleAssessment assess_idle(CellId cell, const KpiView& view, const EnergyPolicy& policy) {
    IdleAssessment a;
    a.cell = cell;
    a.window_s = policy.idle_window_min * 60.0;
    auto it = view.cells.find(cell);
    if (it == view.cells.end() || !it->second.has_data) return a;
    const CellAggregate& c = it->second;
    a.observed = view.window_s + 1e-9 >= a.window_s && c.observed_s + 1e-9 >= a.window_s;
    a.prb_ok = c.prb_dl_max <= policy.idle_prb_max;
    a.sched_ok = c.sched_dl_max <= policy.idle_sched_mbps_max;
    a.ue_ok = c.ue_count_max <= policy.idle_ue_max;
    a.ho_ok = c.ho_arrival_hz <= policy.ho_arrival_max_hz;
    a.idle = a.observed && a.prb_ok && a.sched_ok && a.ue_ok && a.ho_ok;
    return a;
}

bool wake_condition(CellId cell, const KpiView& view, const EnergyPolicy& policy, const CellTopology* topology,
                    const EnergyOptions& options) {
    auto it = view.cells.find(cell);
    if (it == view.cells.end()) return false;
    const CellAggregate& c = it->second;
    if (c.pending_ue_count >= policy.wake_ue_min) return true;
    if (c.pending_sched_dl_mbps >= policy.wake_sched_mbps_min) return true;
    if (!topology) return false;
    auto site = topology->site_of.find(cell);
    if (site == topology->site_of.end()) return false;
    double sum = 0.0;
    int n = 0;
    for (CellId other : topology->cells_at_site(site->second)) {
        auto o = view.cells.find(other);
        if (other == cell || o == view.cells.end() || !o->second.has_data || !o->second.active) continue;
        sum += o->second.prb_dl_mean;
        ++n;
    }
    return n > 0 && sum / n > options.cluster_prb_high;
}

std::vector<ActionProposal> energy_tick(const KpiView& view, const EnergyPolicy& policy, const XappContext& ctx,
                                        const EnergyOptions& options) {
    std::vector<ActionProposal> out;
    for (const auto& [id, c] : view.cells) {
        if (!c.has_data) continue;
        Json hint_ctx;
        hint_ctx["cell"] = id;
        if (c.active) {
            if (c.last_wake_t && ctx.now - *c.last_wake_t < options.sleep_cooldown_s) continue;
            const IdleAssessment a = assess_idle(id, view, policy);
            hint_ctx["state"] = "active";
            hint_ctx["idle"] = a.idle;
            hint_ctx["prb_max"] = c.prb_dl_max;
            hint_ctx["ue_count_max"] = c.ue_count_max;
            bool hinted = false;
            if (!a.idle)
                if (auto hint = xapp_hint(ctx, PromptKind::EnergyHint, std::move(hint_ctx)))
                    hinted = hint->value("sleep", false);
            if (a.idle || hinted)
                out.push_back(ActionProposal::sleep(
                    Agent::Energy, id,
                    a.idle ? fmt::format("energy: idle over {:.0f} s", a.window_s) : "energy: hinted sleep", ctx.now));
        } else {
            const bool cond = wake_condition(id, view, policy, ctx.topology, options);
            hint_ctx["state"] = "sleeping";
            hint_ctx["wake_cond"] = cond;
            hint_ctx["pending_ues"] = c.pending_ue_count;
            bool hinted = false;
            if (!cond)
                if (auto hint = xapp_hint(ctx, PromptKind::EnergyHint, std::move(hint_ctx)))
                    hinted = hint->value("wake", false);
            if (cond || hinted)
                out.push_back(ActionProposal::wake(
                    Agent::Energy, id,
                    cond ? fmt::format("energy: wake, {} pending", c.pending_ue_count) : "energy: hinted wake",
                    ctx.now));
        }
    }
    return out;
}

}  // namespace ranctl
