#include "ranctl/xapp_load.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace ranctl {

std::vector<HotCoolPair> find_pairs(const KpiView& view, const LoadPolicy& policy, const CellTopology& topology) {
    std::vector<HotCoolPair> out;
    for (const auto& [a, ca] : view.cells) {
        if (!ca.has_data || !ca.active || ca.prb_dl_mean < policy.hot_prb) continue;
        for (const auto& [b, cb] : view.cells) {
            if (a == b || !cb.has_data || !cb.active || cb.prb_dl_mean > policy.cool_prb) continue;
            if (!topology.adjacent(a, b)) continue;
            const double gap = ca.prb_dl_mean - cb.prb_dl_mean;
            if (gap > 0.0) out.push_back({a, b, gap});
        }
    }
    std::sort(out.begin(), out.end(), [](const HotCoolPair& x, const HotCoolPair& y) {
        if (x.gap != y.gap) return x.gap > y.gap;
        if (x.hot != y.hot) return x.hot < y.hot;
        return x.cool < y.cool;
    });
    return out;
}

std::vector<HotCoolPair> stable_merge_order(const std::vector<HotCoolPair>& pairs, const PairOrder& hint) {
    std::set<std::pair<CellId, CellId>> seen;
    std::vector<HotCoolPair> front;
    for (const auto& h : hint) {
        if (!seen.insert(h).second) return pairs;
        auto it = std::find_if(pairs.begin(), pairs.end(),
                               [&](const HotCoolPair& p) { return p.hot == h.first && p.cool == h.second; });
        if (it == pairs.end()) return pairs;
        front.push_back(*it);
    }
    for (const auto& p : pairs)
        if (!seen.contains({p.hot, p.cool})) front.push_back(p);
    return front;
}

std::optional<UeId> base_elephant(const KpiView& view, CellId hot, CellId cool) {
    std::optional<UeId> best;
    double best_dl = -1.0;
    for (const auto& [id, u] : view.ues) {
        if (!u.has_data || u.serving_cell != hot || u.sinr_median < 0.0) continue;
        const bool hears_cool = std::any_of(u.neighbors.begin(), u.neighbors.end(), [&](const NeighborMeasurement& m) {
            return m.cell == cool && m.sinr_db >= kMinServiceSinrDb;
        });
        if (!hears_cool) continue;
        if (u.pdcp_dl_mean > best_dl) {
            best_dl = u.pdcp_dl_mean;
            best = id;
        }
    }
    return best;
}

namespace {

bool healthy_target(const CellAggregate& b, const LoadPolicy& policy) {
    return b.mcs_p50 && *b.mcs_p50 >= policy.mcs_min && b.ul_p95_dbm && *b.ul_p95_dbm <= policy.ul_p95_dbm_max;
}

// Elephant candidates per hot cell, for the hint context.
Json elephant_context(const KpiView& view, const std::vector<HotCoolPair>& pairs) {
    Json out = Json::object();
    for (const auto& p : pairs) {
        const std::string key = std::to_string(p.hot);
        if (out.contains(key)) continue;
        if (auto e = base_elephant(view, p.hot, p.cool)) out[key] = Json::array({*e});
    }
    return out;
}

}  // namespace

std::vector<ActionProposal> load_tick(const KpiView& view, const LoadPolicy& policy, const XappContext& ctx,
                                      const LoadOptions& options) {
    std::vector<ActionProposal> out;
    if (!ctx.topology) return out;
    const auto pairs = find_pairs(view, policy, *ctx.topology);

    std::vector<HotCoolPair> ordered = pairs;
    Json hinted_elephants = Json::object();
    if (!pairs.empty()) {
        Json hint_ctx;
        hint_ctx["pairs"] = Json::array();
        for (const auto& p : pairs) hint_ctx["pairs"].push_back(Json::array({p.hot, p.cool, p.gap}));
        hint_ctx["elephants"] = elephant_context(view, pairs);
        if (auto hint = xapp_hint(ctx, PromptKind::LoadHint, std::move(hint_ctx))) {
            PairOrder order;
            for (const auto& pr : (*hint)["pair_order"]) order.emplace_back(pr[0].get<int>(), pr[1].get<int>());
            ordered = stable_merge_order(pairs, order);
            if (hint->contains("elephant")) hinted_elephants = (*hint)["elephant"];
        }
    }

    std::set<std::pair<CellId, CellId>> stepped;
    const auto limit = static_cast<std::size_t>(std::max(0, options.top_k));
    std::size_t acted = 0;
    for (const auto& p : ordered) {
        if (acted >= limit) break;
        UeId elephant = -1;
        const std::string key = std::to_string(p.hot);
        if (hinted_elephants.contains(key)) {
            const UeId u = hinted_elephants[key].get<int>();
            auto it = view.ues.find(u);
            if (it != view.ues.end() && it->second.has_data && it->second.serving_cell == p.hot) elephant = u;
        }
        if (elephant < 0) elephant = base_elephant(view, p.hot, p.cool).value_or(-1);
        if (elephant >= 0 && !healthy_target(view.cells.at(p.cool), policy)) elephant = -1;

        // A pair already at the clamp with nobody to move would hold the slot forever.
        double current = 0.0;
        if (ctx.offsets)
            if (auto it = ctx.offsets->find({p.hot, p.cool}); it != ctx.offsets->end()) current = it->second;
        const bool saturated = current >= options.offset_clamp_db;
        if (saturated && elephant < 0) continue;
        ++acted;

        const std::string why = fmt::format("load: prb gap {:.2f} ({} -> {})", p.gap, p.hot, p.cool);
        if (!saturated) {
            out.push_back(ActionProposal::offset(Agent::Load, p.hot, p.cool, policy.cio_step_db, why, ctx.now));
            stepped.insert({p.hot, p.cool});
            if (options.reciprocal) {
                out.push_back(ActionProposal::offset(Agent::Load, p.cool, p.hot, -policy.cio_step_db, why, ctx.now));
                stepped.insert({p.cool, p.hot});
            }
        }
        if (elephant < 0) continue;
        out.push_back(ActionProposal::ho(Agent::Load, elephant, p.hot, p.cool,
                                         fmt::format("load: elephant ue{} {} -> {}", elephant, p.hot, p.cool),
                                         ctx.now));
    }

    if (options.unwind && ctx.offsets) {
        auto hot = [&](CellId c) {
            auto it = view.cells.find(c);
            return it != view.cells.end() && it->second.has_data && it->second.prb_dl_mean >= policy.hot_prb;
        };
        for (const auto& [pair, off] : *ctx.offsets) {
            if (off == 0.0 || stepped.contains(pair) || hot(pair.first) || hot(pair.second)) continue;
            const double step = -std::copysign(std::min(std::abs(off), policy.cio_step_db), off);
            out.push_back(ActionProposal::offset(Agent::Load, pair.first, pair.second, step,
                                                 fmt::format("load: unwind {:+.1f} dB", off), ctx.now));
        }
    }
    return out;
}

}  // namespace ranctl
