#include "ranctl/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ranctl {

std::string_view to_string(HoCause cause) {
    switch (cause) {
        case HoCause::Native: return "native";
        case HoCause::XApp: return "xapp";
        case HoCause::Reattach: return "reattach";
    }
    return "?";
}

std::string_view to_string(EffectSign s) {
    switch (s) {
        case EffectSign::Improved: return "improved";
        case EffectSign::Worsened: return "worsened";
        case EffectSign::Neutral: return "neutral";
    }
    return "?";
}

bool KpiView::no_data() const {
    for (const auto& [id, c] : cells)
        if (c.has_data) return false;
    for (const auto& [id, u] : ues)
        if (u.has_data) return false;
    return true;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("percentile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw Error("percentile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    // q*n is nudged down so 0.95*100 lands on rank 95, not 96.
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

const std::vector<ParamHistoryEntry>& ParamHistory::entries(const std::string& field) const {
    static const std::vector<ParamHistoryEntry> none;
    auto it = entries_.find(field);
    return it == entries_.end() ? none : it->second;
}

// ---------------------------------------------------------------------------
// Outcome log

void OutcomeLog::track(const ActionProposal& action, Seconds t_action) { tracked_.emplace_back(action, t_action); }

namespace {

EffectSign sign_of(double pre, double post, double dead_band, bool higher_is_better) {
    const double delta = post - pre;
    if (std::abs(delta) <= dead_band * std::abs(pre)) return EffectSign::Neutral;
    const bool up = delta > 0;
    return up == higher_is_better ? EffectSign::Improved : EffectSign::Worsened;
}

}  // namespace

ActionOutcomeEntry OutcomeLog::log_outcome(std::uint64_t action_id, Seconds lag_s, Seconds now,
                                           const Telemetry& tel) {
    auto it = std::find_if(tracked_.begin(), tracked_.end(),
                           [&](const auto& p) { return p.first.id == action_id; });
    if (it == tracked_.end()) throw Error(fmt::format("outcome: unknown action {}", action_id));
    if (lag_s <= 0.0) throw Error("outcome: lag must be positive");
    const auto& [action, t_action] = *it;
    if (now < t_action + lag_s) throw Error("outcome: lag not elapsed");

    ActionOutcomeEntry e;
    e.action = action;
    e.t_action = t_action;
    e.pre.t = t_action;
    e.post.t = t_action + lag_s;
    const Seconds w = tel.config().qoe_window_s;
    const KpiView before = tel.view_window(e.pre.t, w);
    const KpiView after = tel.view_window(e.post.t, w);

    switch (action.kind) {
        case ActionKind::Ho: {
            auto metric = [&](const KpiView& v) {
                auto u = v.ues.find(action.ue);
                return u == v.ues.end() ? 0.0 : u->second.pdcp_dl_mean;
            };
            e.pre.metrics["ue_pdcp_dl_mbps"] = metric(before);
            e.post.metrics["ue_pdcp_dl_mbps"] = metric(after);
            e.effect["ue_pdcp_dl_mbps"] =
                sign_of(metric(before), metric(after), dead_band_, /*higher_is_better=*/true);
            break;
        }
        case ActionKind::OffsetStep: {
            auto metric = [&](const KpiView& v) {
                auto c = v.cells.find(action.cell);
                return c == v.cells.end() ? 0.0 : c->second.prb_dl_mean;
            };
            e.pre.metrics["cell_prb_dl"] = metric(before);
            e.post.metrics["cell_prb_dl"] = metric(after);
            e.effect["cell_prb_dl"] = sign_of(metric(before), metric(after), dead_band_, false);
            break;
        }
        case ActionKind::Sleep: {
            // A wake inside the lag is the auto-revert signal.
            auto c = after.cells.find(action.cell);
            const bool reverted = c != after.cells.end() && c->second.last_wake_t &&
                                  *c->second.last_wake_t > t_action;
            e.pre.metrics["awake"] = 0.0;
            e.post.metrics["awake"] = reverted ? 1.0 : 0.0;
            e.effect["auto_revert"] = reverted ? EffectSign::Worsened : EffectSign::Improved;
            break;
        }
        case ActionKind::Wake: {
            auto metric = [&](const KpiView& v) {
                auto c = v.cells.find(action.cell);
                return c == v.cells.end() ? 0.0 : static_cast<double>(c->second.ue_count);
            };
            e.pre.metrics["cell_ue_count"] = metric(before);
            e.post.metrics["cell_ue_count"] = metric(after);
            e.effect["cell_ue_count"] = EffectSign::Neutral;
            break;
        }
    }

    if (std::find(resolved_ids_.begin(), resolved_ids_.end(), action_id) == resolved_ids_.end()) {
        resolved_ids_.push_back(action_id);
        resolved_.push_back(e);
    }
    return e;
}

void OutcomeLog::resolve_due(Seconds now, const Telemetry& tel) {
    for (const auto& [action, t_action] : tracked_) {
        if (now < t_action + lag_s_) continue;
        if (std::find(resolved_ids_.begin(), resolved_ids_.end(), action.id) != resolved_ids_.end()) continue;
        log_outcome(action.id, lag_s_, now, tel);
    }
}

// ---------------------------------------------------------------------------
// Telemetry

Telemetry::Telemetry(TelemetryConfig cfg) : cfg_(cfg) {
    if (cfg_.sample_interval_s <= 0.0) throw Error("telemetry: sample interval must be positive");
    const Seconds widest = std::max({cfg_.qoe_window_s, cfg_.load_window_s, cfg_.energy_window_s});
    cfg_.retention_s = std::max(cfg_.retention_s, widest);
}

Seconds Telemetry::window_for(Agent agent) const {
    switch (agent) {
        case Agent::Qoe: return cfg_.qoe_window_s;
        case Agent::Load: return cfg_.load_window_s;
        case Agent::Energy: return cfg_.energy_window_s;
    }
    return cfg_.qoe_window_s;
}

void Telemetry::ingest(const KpiSample& sample) {
    if (!std::isfinite(sample.t)) throw Error("telemetry: non-finite time");
    if (!(sample.prb_dl >= 0.0 && sample.prb_dl <= 1.0))
        throw Error(fmt::format("telemetry: prb_dl {} outside [0,1]", sample.prb_dl));
    if (sample.mcs < 0 || sample.mcs > 28) throw Error(fmt::format("telemetry: mcs {} outside [0,28]", sample.mcs));
    if (sample.cell_id < 0) throw Error("telemetry: sample without cell");

    if (sample.ue_id) {
        auto& stream = ue_streams_[*sample.ue_id];
        if (!stream.empty() && sample.t < stream.back().t)
            throw Error(fmt::format("telemetry: time regression on ue{}", *sample.ue_id));
        KpiSample s = sample;
        auto [st, fresh] = ue_state_.try_emplace(*sample.ue_id);
        UeState& state = st->second;
        if (sample.ho_event) {
            state.dwell = 0.0;
            hos_.push_back(*sample.ho_event);
        } else if (fresh) {
            state.dwell = sample.dwell_s;
        } else {
            state.dwell += sample.t - state.last_t;
        }
        state.last_t = sample.t;
        s.dwell_s = state.dwell;
        stream.push_back(std::move(s));
    } else {
        auto& stream = cell_streams_[sample.cell_id];
        if (!stream.empty() && sample.t < stream.back().t)
            throw Error(fmt::format("telemetry: time regression on cell{}", sample.cell_id));
        const bool was_active = stream.empty() ? true : stream.back().cell_active;
        if (was_active != sample.cell_active) cell_transitions_[sample.cell_id].push_back({sample.t, sample.cell_active});
        stream.push_back(sample);
    }
    if (!last_t_ || sample.t > *last_t_) last_t_ = sample.t;
    prune(*last_t_);
}

void Telemetry::prune(Seconds now) {
    const Seconds horizon = now - cfg_.retention_s;
    auto trim = [&](auto& streams) {
        for (auto& [id, dq] : streams)
            while (!dq.empty() && dq.front().t <= horizon) dq.pop_front();
    };
    trim(cell_streams_);
    trim(ue_streams_);
    while (!hos_.empty() && hos_.front().t <= horizon) hos_.pop_front();
}

std::size_t Telemetry::retained_samples() const {
    std::size_t n = 0;
    for (const auto& [id, dq] : cell_streams_) n += dq.size();
    for (const auto& [id, dq] : ue_streams_) n += dq.size();
    return n;
}

std::vector<std::pair<Seconds, bool>> Telemetry::transitions(CellId cell) const {
    std::vector<std::pair<Seconds, bool>> out;
    if (auto it = cell_transitions_.find(cell); it != cell_transitions_.end())
        for (const auto& x : it->second) out.emplace_back(x.t, x.active);
    return out;
}

KpiView Telemetry::view(Agent agent, Seconds now) const { return view_window(now, window_for(agent)); }

namespace {

// Samples with t in (now - w, now], oldest first.
template <typename Deque>
std::vector<const KpiSample*> in_window(const Deque& dq, Seconds now, Seconds w) {
    std::vector<const KpiSample*> out;
    for (auto it = dq.rbegin(); it != dq.rend(); ++it) {
        if (it->t > now) continue;
        if (it->t <= now - w) break;
        out.push_back(&*it);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace

KpiView Telemetry::view_window(Seconds now, Seconds w) const {
    if (w <= 0.0) throw Error("telemetry: window must be positive");
    KpiView v;
    v.now = now;
    v.window_s = w;

    for (const auto& [cell, dq] : cell_streams_) {
        CellAggregate agg;
        const auto samples = in_window(dq, now, w);
        if (!samples.empty()) {
            agg.has_data = true;
            std::vector<double> mcs, ul;
            double prb_sum = 0.0, sched_sum = 0.0;
            for (const KpiSample* s : samples) {
                prb_sum += s->prb_dl;
                sched_sum += s->sched_dl_mbps;
                agg.prb_dl_max = std::max(agg.prb_dl_max, s->prb_dl);
                agg.sched_dl_max = std::max(agg.sched_dl_max, s->sched_dl_mbps);
                agg.ue_count_max = std::max(agg.ue_count_max, s->attached_ue_count);
                if (s->attached_ue_count > 0) mcs.push_back(s->mcs);
                ul.push_back(s->ul_interf_dbm);
            }
            const auto n = static_cast<double>(samples.size());
            agg.prb_dl_mean = prb_sum / n;
            agg.sched_dl_mean = sched_sum / n;
            const KpiSample& last = *samples.back();
            agg.active = last.cell_active;
            agg.ue_count = last.attached_ue_count;
            agg.pending_ue_count = last.pending_ue_count;
            agg.pending_sched_dl_mbps = last.pending_sched_dl_mbps;
            if (!mcs.empty()) agg.mcs_p50 = percentile(mcs, 0.5);
            agg.ul_p95_dbm = percentile(ul, 0.95);
            agg.observed_s = std::min(w, n * cfg_.sample_interval_s);
        } else if (!dq.empty()) {
            agg.active = dq.back().cell_active;
        }
        int arrivals = 0;
        for (const auto& ho : hos_)
            if (ho.to == cell && ho.t > now - w && ho.t <= now) ++arrivals;
        agg.ho_arrival_hz = arrivals / w;
        if (auto tr = cell_transitions_.find(cell); tr != cell_transitions_.end()) {
            for (const auto& x : tr->second) {
                if (x.t > now) break;
                (x.active ? agg.last_wake_t : agg.last_sleep_t) = x.t;
            }
        }
        v.cells.emplace(cell, std::move(agg));
    }

    for (const auto& [ue, dq] : ue_streams_) {
        UeAggregate agg;
        const auto samples = in_window(dq, now, w);
        if (!samples.empty()) {
            agg.has_data = true;
            std::vector<double> sinr;
            double dl = 0.0, share = 0.0, offered = 0.0;
            for (const KpiSample* s : samples) {
                dl += s->pdcp_dl_mbps;
                offered += s->sched_dl_mbps;
                share += s->prb_dl;
                sinr.push_back(s->sinr_db);
            }
            const auto n = static_cast<double>(samples.size());
            agg.pdcp_dl_mean = dl / n;
            agg.sched_dl_mean = offered / n;
            agg.prb_share_mean = share / n;
            agg.sinr_median = percentile(sinr, 0.5);
            const KpiSample& last = *samples.back();
            agg.serving_cell = last.cell_id;
            agg.dwell_s = last.dwell_s;
            agg.neighbors = last.neighbors;
        }
        for (const auto& ho : hos_) {
            if (ho.ue != ue || ho.t > now) continue;
            agg.last_ho_t = ho.t;
            if (ho.cause == HoCause::Native) agg.last_native_ho_t = ho.t;
            if (ho.cause == HoCause::XApp) agg.last_xapp_ho_t = ho.t;
        }
        v.ues.emplace(ue, std::move(agg));
    }
    return v;
}

// ---------------------------------------------------------------------------
// CSV export

void write_kpi_csv_header(std::ostream& out) {
    out << "t,phase,cell_id,ue_id,cell_active,prb_dl,pdcp_dl_mbps,pdcp_ul_mbps,sched_dl_mbps,sinr_db,rsrp_dbm,"
           "rsrq_db,mcs,ul_interf_dbm,attached_ue_count,dwell_s,ho_from,ho_to,ho_cause\n";
}

void write_kpi_csv_row(std::ostream& out, const KpiSample& s) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},", s.t, to_string(s.phase), s.cell_id,
               s.ue_id ? std::to_string(*s.ue_id) : std::string(), s.cell_active ? 1 : 0, s.prb_dl, s.pdcp_dl_mbps,
               s.pdcp_ul_mbps, s.sched_dl_mbps, s.sinr_db, s.rsrp_dbm, s.rsrq_db, s.mcs, s.ul_interf_dbm,
               s.attached_ue_count, s.dwell_s);
    if (s.ho_event)
        fmt::print(out, "{},{},{}\n", s.ho_event->from, s.ho_event->to, to_string(s.ho_event->cause));
    else
        out << ",,\n";
}

}  // namespace ranctl
