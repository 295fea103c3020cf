#include "ranctl/xapp_qoe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace ranctl {

std::vector<QoeCandidate> qoe_candidates(const UeAggregate& ue, const KpiView& view, const QoePolicy& policy,
                                         const CellTopology* topology) {
    std::vector<QoeCandidate> out;
    for (const auto& m : ue.neighbors) {
        if (m.cell == ue.serving_cell) continue;
        if (topology && !topology->adjacent(ue.serving_cell, m.cell)) continue;
        auto c = view.cells.find(m.cell);
        if (c == view.cells.end() || !c->second.has_data || !c->second.active) continue;
        const double free = 1.0 - c->second.prb_dl_mean;
        if (free < policy.headroom_min || m.sinr_db < kMinServiceSinrDb) continue;
        out.push_back({m.cell, m.sinr_db, free});
    }
    return out;
}

std::optional<CellId> qoe_base_choice(const std::vector<QoeCandidate>& candidates) {
    auto best = std::min_element(candidates.begin(), candidates.end(), [](const QoeCandidate& a, const QoeCandidate& b) {
        if (a.sinr_db != b.sinr_db) return a.sinr_db > b.sinr_db;
        if (a.free_prb != b.free_prb) return a.free_prb > b.free_prb;
        return a.cell < b.cell;
    });
    if (best == candidates.end()) return std::nullopt;
    return best->cell;
}

double qoe_expected_gain(const UeAggregate& ue, const QoeCandidate& target) {
    auto se = [](double sinr_db) { return std::log2(1.0 + std::pow(10.0, sinr_db / 10.0)); };
    const double here = ue.prb_share_mean * se(ue.sinr_median);
    const double there = target.free_prb * se(target.sinr_db);
    if (here <= 0.0) return there > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return there / here;
}

bool qoe_shortfall(const UeAggregate& ue, const QoePolicy& policy) {
    const bool starved =
        ue.pdcp_dl_mean < policy.dl_target_mbps && ue.pdcp_dl_mean < kQoeDeliveredFraction * ue.sched_dl_mean;
    return starved || ue.sinr_median < policy.sinr_target_db;
}

std::vector<ActionProposal> qoe_tick(const KpiView& view, const QoePolicy& policy, const XappContext& ctx) {
    std::vector<ActionProposal> out;
    for (const auto& [id, ue] : view.ues) {
        if (!ue.has_data || ue.serving_cell < 0) continue;
        if (!qoe_shortfall(ue, policy)) continue;
        if (ue.dwell_s < policy.min_dwell_s) continue;
        const auto candidates = qoe_candidates(ue, view, policy, ctx.topology);
        const auto base = qoe_base_choice(candidates);
        if (!base) continue;

        CellId chosen = *base;
        Json hint_ctx;
        hint_ctx["ue"] = id;
        hint_ctx["serving"] = ue.serving_cell;
        hint_ctx["pdcp_dl_mbps"] = ue.pdcp_dl_mean;
        hint_ctx["sinr_db"] = ue.sinr_median;
        hint_ctx["candidates"] = Json::array();
        for (const auto& c : candidates)
            hint_ctx["candidates"].push_back({{"cell", c.cell}, {"sinr_db", c.sinr_db}, {"free_prb", c.free_prb}});
        bool hinted = false;
        if (auto hint = xapp_hint(ctx, PromptKind::QoeHint, std::move(hint_ctx))) {
            const int pref = (*hint)["preferred_neighbor"].get<int>();
            if (std::any_of(candidates.begin(), candidates.end(), [&](const QoeCandidate& c) { return c.cell == pref; })) {
                chosen = pref;
                hinted = true;
            }
        }

        // Moving only helps if the target can offer more resource-weighted
        // spectral efficiency than the UE gets where it is.
        const auto& pick = *std::find_if(candidates.begin(), candidates.end(),
                                         [&](const QoeCandidate& c) { return c.cell == chosen; });
        if (!(qoe_expected_gain(ue, pick) > 1.0)) continue;

        out.push_back(ActionProposal::ho(
            Agent::Qoe, id, ue.serving_cell, chosen,
            fmt::format("qoe: dl {:.3f} Mbps, sinr {:.1f} dB; {} cell {}", ue.pdcp_dl_mean, ue.sinr_median,
                        hinted ? "hinted" : "base", chosen),
            ctx.now));
    }
    return out;
}

}  // namespace ranctl
