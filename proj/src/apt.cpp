#include "ranctl/apt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "ranctl/xapp_qoe.hpp"

namespace ranctl {

std::vector<TunerRule> rule_set(double step) {
    return {
        {"qoe-shortfall", "headroom_min", TuneDirection::Decrease, step},
        {"pingpong", "min_dwell_s", TuneDirection::Increase, step},
        {"overload", "cio_step_db", TuneDirection::Increase, step},
        {"ho-churn", "cool_prb", TuneDirection::Decrease, step},
        {"sleep-revert", "idle_prb_max", TuneDirection::Decrease, step},
        {"idle-tail", "idle_prb_max", TuneDirection::Decrease, step},
    };
}

double ema_smooth(double old_value, double proposed, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("ema: alpha must lie in (0, 1]");
    return old_value + alpha * (proposed - old_value);
}

namespace {

Agent owner_of(const std::string& field) {
    for (Agent a : {Agent::Qoe, Agent::Load, Agent::Energy})
        for (const auto& d : catalog_schema(a))
            if (d.name == field) return a;
    throw Error("apt: unknown field " + field);
}

}  // namespace

Apt::Apt(AptConfig cfg, PolicyStore& store, Telemetry& telemetry, AuditLog* audit)
    : cfg_(cfg), store_(store), telemetry_(telemetry), audit_(audit) {
    if (!(cfg_.cadence_s > 0.0)) throw ParseError("apt: cadence must be positive");
    if (!(cfg_.step_fraction > 0.0 && cfg_.step_fraction <= 1.0)) throw ParseError("apt: step must lie in (0, 1]");
    if (!(cfg_.ema_alpha > 0.0 && cfg_.ema_alpha <= 1.0)) throw ParseError("apt: ema_alpha must lie in (0, 1]");
}

bool Apt::due(Seconds now) const {
    if (!cfg_.enabled) return false;
    return last_cycle_ ? now - *last_cycle_ >= cfg_.cadence_s : now >= cfg_.cadence_s;
}

int Apt::count_pingpongs(Seconds from, Seconds to, Seconds horizon) const {
    const auto& hos = telemetry_.handovers();
    int n = 0;
    for (std::size_t i = 0; i < hos.size(); ++i) {
        const HoEvent& e = hos[i];
        if (e.t <= from || e.t > to) continue;
        for (std::size_t j = i; j-- > 0;) {
            if (hos[j].ue != e.ue) continue;
            if (hos[j].from == e.to && e.t - hos[j].t <= horizon) ++n;
            break;
        }
    }
    return n;
}

AptEvidence Apt::gather(Seconds now) const {
    AptEvidence ev;
    const QoePolicy qoe = store_.latest(Agent::Qoe)->qoe();
    const LoadPolicy load = store_.latest(Agent::Load)->load();
    const EnergyPolicy energy = store_.latest(Agent::Energy)->energy();
    const Seconds w = cfg_.load_window_s;
    const int k_windows = std::max(1, cfg_.persist_windows);

    std::vector<KpiView> windows;
    for (int k = 0; k < k_windows; ++k) {
        const Seconds end = now - k * w;
        if (end - w < -1e-9) break;
        windows.push_back(telemetry_.view_window(end, w));
    }
    const bool full = static_cast<int>(windows.size()) == k_windows;

    // Rule 1: some UE short in every window.
    if (full) {
        ev.qoe_shortfall = std::all_of(windows.begin(), windows.end(), [&](const KpiView& v) {
            return std::any_of(v.ues.begin(), v.ues.end(),
                               [&](const auto& u) { return u.second.has_data && qoe_shortfall(u.second, qoe); });
        });
    }
    for (const auto& o : telemetry_.outcomes().resolved()) {
        if (o.action.source != Agent::Qoe || o.action.kind != ActionKind::Ho) continue;
        if (o.t_action <= now - cfg_.cadence_s - telemetry_.outcomes().lag_s()) continue;
        ++ev.qoe_outcomes;
        if (o.effect.at("ue_pdcp_dl_mbps") == EffectSign::Improved) ++ev.qoe_improved;
    }

    // Rule 2: re-handover to the previous cell within 2 min_dwell.
    const Seconds horizon = 2.0 * qoe.min_dwell_s;
    ev.pingpongs = count_pingpongs(now - cfg_.cadence_s, now, horizon);
    ev.pingpongs_prev = count_pingpongs(now - 2.0 * cfg_.cadence_s, now - cfg_.cadence_s, horizon);

    // Rule 3: a cell hot in every window despite offset steps.
    if (full) {
        for (const auto& [cell, c] : windows.front().cells) {
            const bool hot_all = std::all_of(windows.begin(), windows.end(), [&](const KpiView& v) {
                auto it = v.cells.find(cell);
                return it != v.cells.end() && it->second.has_data && it->second.prb_dl_mean > load.hot_prb;
            });
            if (!hot_all) continue;
            int steps = 0;
            for (const auto& [a, t] : telemetry_.outcomes().tracked())
                if (a.kind == ActionKind::OffsetStep && a.cell == cell && a.step_db > 0.0 && t > now - k_windows * w &&
                    t <= now)
                    ++steps;
            if (steps >= 2) {
                ev.overloaded_cell = cell;
                ev.overload_steps = steps;
                break;
            }
        }
    }

    // Rule 4: handover rate against the trailing mean of past cycles.
    int recent = 0;
    for (const auto& h : telemetry_.handovers())
        if (h.t > now - cfg_.cadence_s && h.t <= now) ++recent;
    ev.ho_rate_hz = recent / cfg_.cadence_s;
    if (!ho_rates_.empty())
        ev.ho_rate_trailing_hz = std::accumulate(ho_rates_.begin(), ho_rates_.end(), 0.0) / ho_rates_.size();

    // Rule 5: sleeps undone by a wake inside 2 idle windows.
    const Seconds span = 2.0 * energy.idle_window_min * 60.0;
    for (const auto& [cell, c] : windows.empty() ? KpiView{}.cells : windows.front().cells) {
        std::optional<Seconds> slept;
        for (const auto& [t, active] : telemetry_.transitions(cell)) {
            if (t > now) break;
            if (!active) {
                slept = t;
            } else if (slept) {
                if (t > now - span) ++ev.sleep_reversions;
                slept.reset();
            }
        }
    }

    // Rule 6: an active cell idling just above the idle mark in every window.
    if (full) {
        for (const auto& [cell, c] : windows.front().cells) {
            const bool tail = std::all_of(windows.begin(), windows.end(), [&](const KpiView& v) {
                auto it = v.cells.find(cell);
                if (it == v.cells.end() || !it->second.has_data || !it->second.active) return false;
                const double p = it->second.prb_dl_max;
                return p > energy.idle_prb_max && p <= 2.0 * energy.idle_prb_max;
            });
            if (tail) {
                ev.idle_tail_cell = cell;
                break;
            }
        }
    }
    return ev;
}

bool Apt::fires(const TunerRule& rule, const AptEvidence& ev) const {
    if (cfg_.force_all_rules) return true;
    if (rule.name == "qoe-shortfall")
        return ev.qoe_shortfall && (ev.qoe_outcomes == 0 || 2 * ev.qoe_improved < ev.qoe_outcomes);
    if (rule.name == "pingpong") return ev.pingpongs > ev.pingpongs_prev && ev.pingpongs >= cfg_.pingpong_min;
    if (rule.name == "overload") return ev.overloaded_cell.has_value();
    if (rule.name == "ho-churn")
        return ev.ho_rate_trailing_hz > 0.0 && ev.ho_rate_hz > cfg_.churn_factor * ev.ho_rate_trailing_hz;
    if (rule.name == "sleep-revert") return ev.sleep_reversions >= cfg_.reversion_min;
    if (rule.name == "idle-tail") return ev.idle_tail_cell.has_value();
    return false;
}

std::vector<TunerEdit> Apt::maybe_cycle(Seconds now, Phase phase, Seconds phase_end) {
    if (!due(now)) return {};
    return cycle(now, phase, phase_end);
}

std::vector<TunerEdit> Apt::cycle(Seconds now, Phase phase, Seconds phase_end) {
    last_cycle_ = now;
    ++cycles_;
    const AptEvidence ev = gather(now);
    ho_rates_.push_back(ev.ho_rate_hz);

    std::vector<TunerEdit> out;
    std::set<std::string> touched;
    for (const auto& rule : rule_set(cfg_.step_fraction)) {
        if (touched.contains(rule.target_field) || !fires(rule, ev)) continue;
        if (lineage_of(rule.target_field) != Lineage::Apt) continue;
        const Agent agent = owner_of(rule.target_field);
        const auto current = store_.latest(agent);
        const FieldGuard& g = store_.spec().guard(rule.target_field);
        const double old = current->values.at(rule.target_field);
        const double step = rule.step * g.max_step_per_edit;
        double proposed = rule.direction == TuneDirection::Increase ? old + step : old - step;
        if (cfg_.ema) proposed = ema_smooth(old, proposed, cfg_.ema_alpha);

        FieldValues next = current->values;
        next[rule.target_field] = proposed;
        next = clamp_rate_limit(next, current->values, store_.spec(), store_.edit_clock(), now);
        const double value = next.at(rule.target_field);
        if (value == old) continue;
        touched.insert(rule.target_field);

        PolicyInstance inst = *current;
        inst.values = current->values;
        inst.values[rule.target_field] = value;
        inst.issued_at = now;
        inst.source = PolicySource::Apt;
        inst.ttl_s.reset();
        if (phase == Phase::Emergency && phase_end > now) inst.ttl_s = phase_end - now;
        const std::string reason = fmt::format("{}: {} {} -> {}", rule.name, rule.target_field, old, value);
        const auto res = store_.publish(inst, reason);
        if (!res.published) continue;

        TunerEdit e{rule.target_field, old, value, reason, now, inst.ttl_s, cfg_.ema};
        telemetry_.params().record(rule.target_field, {now, old, value, "APT", reason});
        if (audit_) {
            Json p;
            p["field"] = e.field;
            p["rule"] = rule.name;
            p["version"] = res.version;
            p["source"] = "APT";
            p["changes"] = {{e.field, Json::array({old, value})}};
            p["ema"] = e.ema_applied;
            if (e.ttl_s) p["ttl_s"] = *e.ttl_s;
            audit_->append(now, AuditSource::Apt, AuditKind::AptEdit, p, reason);
        }
        edits_.push_back(e);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace ranctl
