#include "ranctl/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "ranctl/xapp_qoe.hpp"

namespace ranctl {

std::string_view to_string(PlayName p) {
    switch (p) {
        case PlayName::QoeFirst: return "qoe_first";
        case PlayName::LoadFirst: return "load_first";
        case PlayName::EnergyFirst: return "energy_first";
    }
    return "?";
}

std::optional<PlayName> play_from_string(std::string_view name) {
    if (name == "qoe_first") return PlayName::QoeFirst;
    if (name == "load_first") return PlayName::LoadFirst;
    if (name == "energy_first") return PlayName::EnergyFirst;
    return std::nullopt;
}

namespace {

std::map<std::string, FieldPreset> base_presets() {
    return {
        {"sinr_target_db", {-2.0, 2.0}},
        {"headroom_min", {0.25, 0.10}},
        {"min_dwell_s", {5.0, 3.0}},
        {"ue_ban_s", {15.0, 10.0}},
        {"hot_prb", {0.95, 0.75}},
        {"cool_prb", {0.40, 0.60}},
        {"mcs_min", {5.0, 2.0}},
        {"idle_window_min", {10.0, 5.0}},
        {"idle_prb_max", {0.03, 0.08}},
        {"idle_sched_mbps_max", {0.1, 0.3}},
        {"idle_ue_max", {0.0, 1.0}},
        {"wake_ue_min", {2.0, 2.0}},
        {"wake_sched_mbps_min", {0.8, 1.5}},
        {"ho_arrival_max_hz", {0.01, 0.05}},
    };
}

std::map<PlayName, Play> make_plays() {
    std::map<PlayName, Play> plays;
    Play qoe{PlayName::QoeFirst, base_presets(), false};
    qoe.presets["idle_window_min"] = {10.0, 6.0};
    qoe.presets["idle_prb_max"] = {0.02, 0.05};
    Play load{PlayName::LoadFirst, base_presets(), false};
    Play energy{PlayName::EnergyFirst, base_presets(), true};
    energy.presets["idle_window_min"] = {8.0, 2.0};
    plays.emplace(qoe.name, qoe);
    plays.emplace(load.name, load);
    plays.emplace(energy.name, energy);
    return plays;
}

double weight_for(Agent a, const IntentWeights& w) {
    switch (a) {
        case Agent::Qoe: return w.w_qoe;
        case Agent::Load: return w.w_load;
        case Agent::Energy: return w.w_energy;
    }
    return 0.0;
}

}  // namespace

const Play& builtin_play(PlayName name) {
    static const std::map<PlayName, Play> plays = make_plays();
    return plays.at(name);
}

void Intent::validate() const {
    if (!(prb_ceiling > 0.0 && prb_ceiling <= 1.0)) throw ParseError("intent: prb_ceiling must lie in (0, 1]");
}

CoarseSignals coarse_signals(const KpiView& view, double hot_prb) {
    CoarseSignals s;
    bool any = false;
    bool all_low = true;
    for (const auto& [id, c] : view.cells) {
        if (!c.has_data) continue;
        any = true;
        if (c.prb_dl_mean > hot_prb) s.hotspot = true;
        if (c.prb_dl_mean >= kQuietPrb) all_low = false;
    }
    s.quiet = any && all_low;
    return s;
}

PlayName select_play(Phase phase, const KpiView& coarse_view, const Intent& intent, double hot_prb) {
    if (auto o = intent.phase_overrides.find(phase); o != intent.phase_overrides.end()) return o->second;
    const CoarseSignals s = coarse_signals(coarse_view, hot_prb);
    switch (phase) {
        case Phase::Emergency: return PlayName::QoeFirst;
        case Phase::Normal: return s.quiet ? PlayName::EnergyFirst : PlayName::LoadFirst;
        case Phase::Recovery: return s.hotspot ? PlayName::LoadFirst : PlayName::EnergyFirst;
    }
    return PlayName::LoadFirst;
}

std::map<Agent, FieldValues> translate_intent(const IntentWeights& w, const Play& play, const Intent& intent) {
    std::map<Agent, FieldValues> out;
    for (Agent agent : kAgents) {
        FieldValues& v = out[agent];
        for (const auto& d : catalog_schema(agent)) {
            if (lineage_of(d.name) == Lineage::Platform) continue;
            if (d.name == "cio_step_db") {
                v[d.name] = 0.5 + w.w_load * 1.0;
                continue;
            }
            if (d.name == "dl_target_mbps") {
                v[d.name] = 0.3 + w.w_qoe * 0.5;
                continue;
            }
            auto p = play.presets.find(d.name);
            if (p == play.presets.end()) continue;
            // ue_ban_s is shared by QoE and Load and follows the QoE weight.
            const double k = d.name == "ue_ban_s" ? w.w_qoe : weight_for(agent, w);
            double x = (1.0 - k) * p->second.conservative + k * p->second.aggressive;
            if (d.integral) x = std::round(x);
            if (d.name == "hot_prb") x = std::min(x, intent.prb_ceiling);
            v[d.name] = x;
        }
    }
    return out;
}

FieldValues default_values(Agent agent) {
    switch (agent) {
        case Agent::Qoe: return QoePolicy{}.to_fields();
        case Agent::Load: return LoadPolicy{}.to_fields();
        case Agent::Energy: return EnergyPolicy{}.to_fields();
    }
    return {};
}

// ---------------------------------------------------------------------------
// Merge

int priority_rank(Agent a) { return static_cast<int>(a); }

namespace {

// Total order used both for picking winners and for output order.
auto order_key(const ActionProposal& p) {
    return std::make_tuple(priority_rank(p.source), subject_key(p), p.target, p.cell, p.t_proposed,
                           static_cast<int>(p.kind), p.step_db, p.id, std::cref(p.reason));
}

bool before(const ActionProposal& a, const ActionProposal& b) { return order_key(a) < order_key(b); }

}  // namespace

MergeResult merge(std::vector<ActionProposal> proposals) {
    MergeResult out;
    std::sort(proposals.begin(), proposals.end(), [](const ActionProposal& a, const ActionProposal& b) {
        const auto ka = subject_key(a), kb = subject_key(b);
        if (ka != kb) return ka < kb;
        return before(a, b);
    });
    for (std::size_t i = 0; i < proposals.size();) {
        std::size_t j = i + 1;
        while (j < proposals.size() && subject_key(proposals[j]) == subject_key(proposals[i])) ++j;
        out.accepted.push_back(proposals[i]);
        for (std::size_t k = i + 1; k < j; ++k) out.rejected.push_back({proposals[k], false, "deduped"});
        i = j;
    }
    std::sort(out.accepted.begin(), out.accepted.end(), before);
    std::sort(out.rejected.begin(), out.rejected.end(),
              [](const Decision& a, const Decision& b) { return before(a.proposal, b.proposal); });
    return out;
}

// ---------------------------------------------------------------------------
// Guards

double GuardState::offset(CellId a, CellId b) const {
    auto it = offsets.find({a, b});
    return it == offsets.end() ? 0.0 : it->second;
}

bool GuardState::active(CellId c) const {
    auto it = cell_active.find(c);
    return it == cell_active.end() || it->second;
}

namespace {

std::string ho_guard(const ActionProposal& p, GuardState& state, const GuardInputs& in) {
    if (!state.active(p.target)) return "target-sleeping";
    const UeAggregate* ue = nullptr;
    if (in.view)
        if (auto it = in.view->ues.find(p.ue); it != in.view->ues.end() && it->second.has_data) ue = &it->second;
    if (!ue) return "no-data";
    if (ue->serving_cell == p.target) return "no-op";
    const double floor = in.spec ? in.spec->global_dwell_floor_s : 0.0;
    if (ue->dwell_s < std::max(in.qoe.min_dwell_s, floor)) return "dwell";
    std::optional<Seconds> last = ue->last_xapp_ho_t;
    if (auto it = state.last_xapp_ho.find(p.ue); it != state.last_xapp_ho.end())
        last = last ? std::max(*last, it->second) : it->second;
    if (last && in.now - *last < in.qoe.ue_ban_s) return "ban";
    if (ue->last_native_ho_t && in.now - *ue->last_native_ho_t < in.qoe.ue_ban_s) return "native-recent";
    return {};
}

}  // namespace

DispatchBatch enforce_guards(const std::vector<ActionProposal>& accepted, GuardState& state, const GuardInputs& in) {
    DispatchBatch batch;
    batch.tick_t = in.now;
    const GuardrailSpec defaults;
    const GuardrailSpec& spec = in.spec ? *in.spec : defaults;

    for (const auto& p : accepted) {
        std::string guard;
        DispatchedAction d{p, p.step_db, 0.0};
        switch (p.kind) {
            case ActionKind::Sleep: {
                if (!state.active(p.cell)) {
                    guard = "no-op";
                    break;
                }
                if (in.topology) {
                    auto site = in.topology->site_of.find(p.cell);
                    if (site != in.topology->site_of.end()) {
                        int active = 0;
                        for (CellId c : in.topology->cells_at_site(site->second))
                            if (state.active(c)) ++active;
                        if (active - 1 < spec.min_active_cells_per_site) guard = "min-active";
                    }
                }
                if (guard.empty()) state.cell_active[p.cell] = false;
                break;
            }
            case ActionKind::Wake:
                if (state.active(p.cell))
                    guard = "no-op";
                else
                    state.cell_active[p.cell] = true;
                break;
            case ActionKind::Ho:
                guard = ho_guard(p, state, in);
                if (guard.empty()) {
                    state.last_xapp_ho[p.ue] = in.now;
                    d.hold_s = in.qoe.ue_ban_s;
                    d.step_db = 0.0;
                }
                break;
            case ActionKind::OffsetStep: {
                const auto key = std::make_pair(p.cell, p.target);
                const double cur = state.offset(p.cell, p.target);
                const double next = std::clamp(cur + p.step_db, spec.offset_clamp_min_db, spec.offset_clamp_max_db);
                if (next == cur) {
                    guard = "clamp";
                    break;
                }
                if (auto it = state.pair_last_step.find(key);
                    it != state.pair_last_step.end() && in.now - it->second < spec.offset_cooldown_s) {
                    guard = "cooldown";
                    break;
                }
                auto& steps = state.offset_steps[p.cell];
                while (!steps.empty() && steps.front() <= in.now - spec.budget_window_s) steps.pop_front();
                if (static_cast<int>(steps.size()) >= spec.budget_offset_steps) {
                    guard = "budget";
                    break;
                }
                d.step_db = next - cur;
                // Same expression the simulator uses, so both sides agree bitwise.
                state.offsets[key] = std::clamp(cur + d.step_db, spec.offset_clamp_min_db, spec.offset_clamp_max_db);
                steps.push_back(in.now);
                state.pair_last_step[key] = in.now;
                break;
            }
        }
        batch.decisions.push_back({p, guard.empty(), guard});
        if (!guard.empty()) continue;
        (plane_of(p.kind) == Plane::E2 ? batch.e2_actions : batch.o1_actions).push_back(std::move(d));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Orchestrator

Orchestrator::Orchestrator(OrchestratorConfig cfg, PolicyStore& store, const Telemetry& telemetry,
                           CellTopology topology, AuditLog* audit, IntentProvider* provider, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      store_(store),
      telemetry_(telemetry),
      topology_(std::move(topology)),
      audit_(audit),
      provider_(provider),
      seed_(seed) {
    cfg_.intent.validate();
    cfg_.deadlines.validate();
    for (Agent a : kAgents) {
        stats_.xapp_ticks[a] = 0;
        stats_.xapp_failures[a] = 0;
        if (store_.latest(a)) continue;
        PolicyInstance inst;
        inst.agent = a;
        inst.values = default_values(a);
        if (inst.values.contains("ul_p95_dbm_max")) inst.values["ul_p95_dbm_max"] = cfg_.ul_p95_dbm_max;
        inst.source = PolicySource::Default;
        auto res = store_.publish(inst, "defaults");
        if (!res.published) throw Error(fmt::format("orchestrator: default {} policy rejected", to_string(a)));
    }
}

FieldValues Orchestrator::current_values(Agent agent) const { return store_.latest(agent)->values; }

void Orchestrator::refresh_guard_state(const KpiView& view) {
    for (const auto& [id, c] : view.cells)
        if (c.has_data) guards_.cell_active[id] = c.active;
}

IntentWeights Orchestrator::blend(Seconds now, Phase phase, PlayName play, const KpiView& load_view, double hot_prb) {
    (void)now;
    if (provider_) {
        const CoarseSignals s = coarse_signals(load_view, hot_prb);
        Json ctx;
        ctx["goal"] = cfg_.intent.text;
        ctx["play"] = std::string(to_string(play));
        ctx["phase"] = std::string(to_string(phase));
        ctx["hotspot"] = s.hotspot;
        ctx["quiet"] = s.quiet;
        Json prb = Json::object();
        for (const auto& [id, c] : load_view.cells)
            if (c.has_data) prb[std::to_string(id)] = c.prb_dl_mean;
        ctx["prb_dl"] = prb;
        ctx["memory"] = {{"apt_fields", store_.edit_clock().size()}};
        PromptRequest req{PromptKind::L2Blend, std::move(ctx), cfg_.deadlines.tau_llm_ms, seed_};
        PromptResponse r = ask(*provider_, req);
        if (r.valid)
            return {r.payload["w_qoe"].get<double>(), r.payload["w_load"].get<double>(),
                    r.payload["w_energy"].get<double>()};
    }
    ++stats_.l2_fallbacks;
    return heuristic_blend(phase, load_view, hot_prb);
}

void Orchestrator::publish_targets(Seconds now, const std::map<Agent, FieldValues>& targets) {
    const GuardrailSpec& spec = store_.spec();
    for (Agent agent : kAgents) {
        const FieldValues current = current_values(agent);
        FieldValues proposed = current;
        for (const auto& [name, v] : targets.at(agent)) {
            // APT edits stick: L2 leaves a field alone once the tuner owns it.
            if (lineage_of(name) == Lineage::Apt && store_.edit_clock().contains(name)) continue;
            proposed[name] = v;
        }
        if (proposed.contains("ul_p95_dbm_max")) proposed["ul_p95_dbm_max"] = cfg_.ul_p95_dbm_max;
        const FieldValues next = clamp_rate_limit(proposed, current, spec, {}, now);
        bool changed = false;
        for (const auto& [name, v] : next) {
            const FieldGuard& g = spec.guard(name);
            if (std::abs(v - current.at(name)) > cfg_.republish_deadband * (g.max - g.min)) changed = true;
        }
        if (!changed) continue;
        PolicyInstance inst;
        inst.agent = agent;
        inst.values = next;
        inst.issued_at = now;
        inst.source = PolicySource::IntentL2;
        const auto res = store_.publish(inst, fmt::format("l2 play={} w=({:.2f},{:.2f},{:.2f})", to_string(last_play_),
                                                          last_weights_.w_qoe, last_weights_.w_load,
                                                          last_weights_.w_energy));
        if (res.published) ++stats_.publications;
    }
}

std::vector<ActionProposal> Orchestrator::collect(Seconds now, const KpiView& qoe_view, const KpiView& load_view,
                                                  const KpiView& energy_view, const Play& play) {
    std::vector<ActionProposal> all;
    XappContext ctx{now, provider_, cfg_.deadlines.tau_xapp_ms, seed_, &topology_, &guards_.offsets};
    for (Agent agent : kAgents) {
        // The snapshot is held for the whole xApp tick.
        const auto snapshot = store_.latest(agent);
        ++stats_.xapp_ticks[agent];
        std::vector<ActionProposal> got;
        try {
            switch (agent) {
                case Agent::Qoe: got = qoe_tick(qoe_view, snapshot->qoe(), ctx); break;
                case Agent::Load: {
                    LoadOptions opt = cfg_.load;
                    opt.unwind = opt.unwind || play.unwind_offsets;
                    opt.offset_clamp_db = store_.spec().offset_clamp_max_db;
                    got = load_tick(load_view, snapshot->load(), ctx, opt);
                    break;
                }
                case Agent::Energy: got = energy_tick(energy_view, snapshot->energy(), ctx, cfg_.energy); break;
            }
        } catch (const Error&) {
            ++stats_.xapp_failures[agent];
            got.clear();
        }
        for (auto& p : got) {
            p.source = agent;
            p.id = next_id_++;
            all.push_back(std::move(p));
        }
    }
    return all;
}

void Orchestrator::audit_batch(Seconds now, const std::vector<ActionProposal>& proposals, const MergeResult& merged,
                               const DispatchBatch& batch) {
    if (!audit_) return;
    for (const auto& p : proposals)
        audit_->append(now, audit_source_for(p.source), AuditKind::Propose, {{"action", action_to_json(p)}}, p.reason);
    for (const auto& d : merged.rejected)
        audit_->append(now, AuditSource::Dispatcher, AuditKind::Refuse,
                       {{"action", action_to_json(d.proposal)}, {"guard", d.guard}}, "merge");
    for (const auto& p : merged.accepted)
        audit_->append(now, AuditSource::Dispatcher, AuditKind::MergeDecision,
                       {{"action", action_to_json(p)}, {"accepted", true}, {"id", p.id}});
    for (const auto& d : batch.decisions)
        if (!d.accepted)
            audit_->append(now, AuditSource::Dispatcher, AuditKind::Refuse,
                           {{"action", action_to_json(d.proposal)}, {"guard", d.guard}}, "guard");
    if (batch.empty()) return;
    auto planes = [](const std::vector<DispatchedAction>& list) {
        Json arr = Json::array();
        for (const auto& a : list) {
            Json j = action_to_json(a.proposal);
            if (a.proposal.kind == ActionKind::OffsetStep) j["step_db"] = a.step_db;
            if (a.proposal.kind == ActionKind::Ho) j["hold_s"] = a.hold_s;
            arr.push_back(std::move(j));
        }
        return arr;
    };
    audit_->append(now, AuditSource::Dispatcher, AuditKind::Dispatch,
                   {{"tick", now}, {"e2", planes(batch.e2_actions)}, {"o1", planes(batch.o1_actions)}});
}

DispatchBatch Orchestrator::tick(Seconds now, Phase phase) {
    ++stats_.ticks;
    const KpiView qoe_view = telemetry_.view_window(now, cfg_.qoe_window_s);
    const KpiView load_view = telemetry_.view_window(now, cfg_.load_window_s);
    refresh_guard_state(load_view);

    const double hot_prb = store_.latest(Agent::Load)->load().hot_prb;
    last_play_ = select_play(phase, load_view, cfg_.intent, hot_prb);
    const Play& play = builtin_play(last_play_);
    last_weights_ = blend(now, phase, last_play_, load_view, hot_prb);
    const auto targets = translate_intent(last_weights_, play, cfg_.intent);
    if (!cfg_.frozen(now)) publish_targets(now, targets);

    const double energy_window = store_.latest(Agent::Energy)->energy().idle_window_min * 60.0;
    const KpiView energy_view = telemetry_.view_window(now, energy_window);
    const auto proposals = collect(now, qoe_view, load_view, energy_view, play);
    const MergeResult merged = merge(proposals);

    GuardInputs in{now, &qoe_view, store_.latest(Agent::Qoe)->qoe(), &store_.spec(), &topology_};
    DispatchBatch batch = enforce_guards(merged.accepted, guards_, in);
    for (const auto& d : merged.rejected) batch.decisions.push_back(d);
    audit_batch(now, proposals, merged, batch);
    return batch;
}

}  // namespace ranctl
