#include "ranctl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace ranctl {

std::string_view to_string(Controller c) { return c == Controller::Baseline ? "baseline" : "agentic"; }

Controller controller_from_string(std::string_view name) {
    if (name == "baseline") return Controller::Baseline;
    if (name == "agentic") return Controller::Agentic;
    throw ParseError(fmt::format("unknown controller '{}' (baseline|agentic)", name));
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// One visitor drives both directions so the reader and writer cannot drift.
class Reader {
public:
    static constexpr bool reading = true;

    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ParseError(fmt::format("{}: expected an object", path_.empty() ? "<root>" : path_));
    }

    void field(const char* key, double& v) {
        if (const Json* x = take(key)) {
            if (!x->is_number()) bad(key, "a number");
            v = x->get<double>();
        }
    }
    void field(const char* key, int& v) {
        if (const Json* x = take(key)) {
            if (!x->is_number_integer()) bad(key, "an integer");
            v = x->get<int>();
        }
    }
    void field(const char* key, std::uint64_t& v) {
        if (const Json* x = take(key)) {
            if (!x->is_number_unsigned() && !(x->is_number_integer() && x->get<std::int64_t>() >= 0))
                bad(key, "a non-negative integer");
            v = x->get<std::uint64_t>();
        }
    }
    void field(const char* key, bool& v) {
        if (const Json* x = take(key)) {
            if (!x->is_boolean()) bad(key, "a boolean");
            v = x->get<bool>();
        }
    }
    void field(const char* key, std::string& v) {
        if (const Json* x = take(key)) {
            if (!x->is_string()) bad(key, "a string");
            v = x->get<std::string>();
        }
    }
    void field(const char* key, std::set<int>& v) {
        if (const Json* x = take(key)) {
            if (!x->is_array()) bad(key, "an array of integers");
            v.clear();
            for (const auto& e : *x) {
                if (!e.is_number_integer()) bad(key, "an array of integers");
                v.insert(e.get<int>());
            }
        }
    }
    template <typename F>
    void object(const char* key, F&& fn) {
        if (const Json* x = take(key)) {
            Reader sub(*x, join(path_, key));
            fn(sub);
            sub.done();
        }
    }
    // Raw access for irregular shapes.
    const Json* raw(const char* key) { return take(key); }
    std::string path(const char* key) const { return join(path_, key); }

    void done() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.contains(k)) throw ParseError(fmt::format("{}: unknown key", join(path_, k)));
    }

private:
    const Json* take(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    [[noreturn]] void bad(const char* key, const char* what) const {
        throw ParseError(fmt::format("{}: expected {}", join(path_, key), what));
    }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer {
public:
    static constexpr bool reading = false;

    explicit Writer(Json& j) : j_(j) { j_ = Json::object(); }

    template <typename T>
    void field(const char* key, T& v) {
        j_[key] = v;
    }
    void field(const char* key, std::set<int>& v) {
        Json arr = Json::array();
        for (int x : v) arr.push_back(x);
        j_[key] = arr;
    }
    template <typename F>
    void object(const char* key, F&& fn) {
        Json sub;
        Writer w(sub);
        fn(w);
        j_[key] = sub;
    }
    Json& out() { return j_; }

private:
    Json& j_;
};

template <typename V>
void visit_scenario(V& v, ScenarioConfig& s) {
    v.field("seed", s.seed);
    v.field("duration_s", s.duration_s);
    if constexpr (V::reading) {
        if (const Json* p = v.raw("phases")) {
            if (!p->is_array()) throw ParseError(v.path("phases") + ": expected an array");
            s.phases.clear();
            for (std::size_t i = 0; i < p->size(); ++i) {
                Reader r((*p)[i], fmt::format("{}[{}]", v.path("phases"), i));
                std::string name;
                PhaseSpan span;
                r.field("name", name);
                r.field("start_s", span.start);
                r.field("end_s", span.end);
                r.done();
                auto ph = phase_from_string(name);
                if (!ph) throw ParseError(fmt::format("{}[{}].name: unknown phase '{}'", v.path("phases"), i, name));
                span.phase = *ph;
                s.phases.push_back(span);
            }
        }
    } else {
        Json arr = Json::array();
        const auto phases = s.phases.empty() ? ScenarioConfig::default_phases(s.duration_s) : s.phases;
        for (const auto& p : phases)
            arr.push_back({{"name", std::string(to_string(p.phase))}, {"start_s", p.start}, {"end_s", p.end}});
        v.out()["phases"] = arr;
    }
    v.field("incident_cells", s.incident_cells);
    v.field("n_ues", s.n_ues);
    v.field("shadowing_sigma_db", s.shadowing_sigma_db);
    v.field("offset_clamp_db", s.offset_clamp_db);
    v.field("min_active_cells_per_site", s.min_active_cells_per_site);
    v.field("parallel_kernel", s.parallel_kernel);
    v.field("min_sinr_db", s.min_sinr_db);
    v.object("topology", [&](auto& t) {
        auto& c = s.topology;
        if constexpr (V::reading) {
            if (const Json* arr = t.raw("sites")) {
                if (!arr->is_array()) throw ParseError(t.path("sites") + ": expected an array");
                c.sites.clear();
                for (std::size_t i = 0; i < arr->size(); ++i) {
                    Reader r((*arr)[i], fmt::format("{}[{}]", t.path("sites"), i));
                    SiteConfig site;
                    r.field("x_m", site.x);
                    r.field("y_m", site.y);
                    if (const Json* az = r.raw("azimuths_deg")) {
                        if (!az->is_array()) throw ParseError(r.path("azimuths_deg") + ": expected an array");
                        for (const auto& a : *az) {
                            if (!a.is_number()) throw ParseError(r.path("azimuths_deg") + ": expected numbers");
                            site.azimuths_deg.push_back(a.get<double>());
                        }
                    }
                    r.done();
                    c.sites.push_back(site);
                }
            }
        } else {
            Json arr = Json::array();
            for (const auto& site : c.sites)
                arr.push_back({{"x_m", site.x}, {"y_m", site.y}, {"azimuths_deg", site.azimuths_deg}});
            t.out()["sites"] = arr;
        }
        t.field("area_width_m", c.area_width_m);
        t.field("area_height_m", c.area_height_m);
        t.field("tx_power_dbm", c.tx_power_dbm);
        t.field("ue_tx_power_dbm", c.ue_tx_power_dbm);
        t.field("capacity_mbps", c.capacity_mbps);
        t.field("coverage_reach_m", c.coverage_reach_m);
        t.field("neighbor_distance_m", c.neighbor_distance_m);
        t.field("ue_spawn_radius_m", c.ue_spawn_radius_m);
    });
    v.object("traffic", [&](auto& t) {
        auto& c = s.traffic;
        t.field("embb_rate_min_mbps", c.embb_rate_min_mbps);
        t.field("embb_rate_max_mbps", c.embb_rate_max_mbps);
        t.field("embb_idle_min_mbps", c.embb_idle_min_mbps);
        t.field("embb_idle_max_mbps", c.embb_idle_max_mbps);
        t.field("embb_on_mean_s", c.embb_on_mean_s);
        t.field("embb_off_mean_s", c.embb_off_mean_s);
        t.field("urllc_dl_mbps", c.urllc_dl_mbps);
        t.field("v2x_ul_mbps", c.v2x_ul_mbps);
        t.field("mmtc_ul_mbps", c.mmtc_ul_mbps);
        t.field("mmtc_period_mean_s", c.mmtc_period_mean_s);
    });
    v.object("mobility", [&](auto& t) {
        auto& c = s.mobility;
        t.field("vehicular_fraction", c.vehicular_fraction);
        t.field("ped_speed_min_mps", c.ped_speed_min_mps);
        t.field("ped_speed_max_mps", c.ped_speed_max_mps);
        t.field("ped_turn_mean_s", c.ped_turn_mean_s);
        t.field("veh_speed_min_mps", c.veh_speed_min_mps);
        t.field("veh_speed_max_mps", c.veh_speed_max_mps);
        t.field("veh_reversal_s", c.veh_reversal_s);
    });
    v.object("surge", [&](auto& t) {
        auto& c = s.surge;
        t.field("zone_x_m", c.zone_x_m);
        t.field("zone_y_m", c.zone_y_m);
        t.field("zone_radius_m", c.zone_radius_m);
        t.field("multiplier", c.multiplier);
    });
    v.object("native_ho", [&](auto& t) {
        auto& c = s.native_ho;
        t.field("serving_threshold_index", c.serving_threshold_index);
        t.field("neighbor_offset_index", c.neighbor_offset_index);
        t.field("a2_period_ms", c.a2_period_ms);
        t.field("a4_period_ms", c.a4_period_ms);
    });
    v.object("radio", [&](auto& t) {
        auto& c = s.radio;
        t.field("pathloss_a_db", c.pathloss_a_db);
        t.field("pathloss_exponent", c.pathloss_exponent);
        t.field("min_distance_m", c.min_distance_m);
        t.field("noise_dbm", c.noise_dbm);
        t.field("beamwidth_deg", c.beamwidth_deg);
        t.field("front_back_db", c.front_back_db);
        t.field("rsrq_floor_db", c.rsrq_floor_db);
        t.field("rsrq_ceil_db", c.rsrq_ceil_db);
    });
}

template <typename V>
void visit_intent(V& v, Intent& in) {
    v.field("text", in.text);
    v.field("protected_ues", in.protected_ues);
    v.field("prb_ceiling", in.prb_ceiling);
    if constexpr (V::reading) {
        if (const Json* o = v.raw("phase_overrides")) {
            if (!o->is_object()) throw ParseError(v.path("phase_overrides") + ": expected an object");
            in.phase_overrides.clear();
            for (const auto& [k, val] : o->items()) {
                auto ph = phase_from_string(k);
                std::optional<PlayName> play;
                if (val.is_string()) play = play_from_string(val.template get<std::string>());
                if (!ph || !play)
                    throw ParseError(fmt::format("{}.{}: expected phase -> qoe_first|load_first|energy_first",
                                                 v.path("phase_overrides"), k));
                in.phase_overrides[*ph] = *play;
            }
        }
    } else {
        Json o = Json::object();
        for (const auto& [ph, play] : in.phase_overrides) o[std::string(to_string(ph))] = std::string(to_string(play));
        v.out()["phase_overrides"] = o;
    }
}

template <typename V>
void visit_guardrails(V& v, GuardrailSpec& g) {
    if constexpr (V::reading) {
        if (const Json* f = v.raw("fields")) {
            if (!f->is_object()) throw ParseError(v.path("fields") + ": expected an object");
            for (const auto& [name, val] : f->items()) {
                auto it = g.fields.find(name);
                if (it == g.fields.end()) throw ParseError(fmt::format("{}.{}: unknown field", v.path("fields"), name));
                Reader r(val, fmt::format("{}.{}", v.path("fields"), name));
                r.field("min", it->second.min);
                r.field("max", it->second.max);
                r.field("max_step_per_edit", it->second.max_step_per_edit);
                r.field("edit_cooldown_s", it->second.edit_cooldown_s);
                r.done();
            }
        }
    } else {
        Json f = Json::object();
        for (const auto& [name, fg] : g.fields)
            f[name] = {{"min", fg.min},
                       {"max", fg.max},
                       {"max_step_per_edit", fg.max_step_per_edit},
                       {"edit_cooldown_s", fg.edit_cooldown_s}};
        v.out()["fields"] = f;
    }
    v.field("offset_clamp_min_db", g.offset_clamp_min_db);
    v.field("offset_clamp_max_db", g.offset_clamp_max_db);
    v.field("budget_offset_steps", g.budget_offset_steps);
    v.field("budget_window_s", g.budget_window_s);
    v.field("offset_cooldown_s", g.offset_cooldown_s);
    v.field("min_active_cells_per_site", g.min_active_cells_per_site);
    v.field("global_dwell_floor_s", g.global_dwell_floor_s);
}

template <typename V>
void visit_run(V& v, RunConfig& c) {
    v.object("scenario", [&](auto& s) { visit_scenario(s, c.scenario); });
    std::string controller(to_string(c.controller));
    v.field("controller", controller);
    if constexpr (V::reading) c.controller = controller_from_string(controller);
    v.object("provider", [&](auto& p) {
        p.field("kind", c.provider.kind);
        p.field("stub_latency_ms", c.provider.stub_latency_ms);
        p.field("tau_llm_ms", c.orchestrator.deadlines.tau_llm_ms);
        p.field("tau_xapp_ms", c.orchestrator.deadlines.tau_xapp_ms);
    });
    v.object("intent", [&](auto& i) { visit_intent(i, c.orchestrator.intent); });
    v.object("guardrails", [&](auto& g) { visit_guardrails(g, c.guardrails); });
    v.object("platform", [&](auto& p) { p.field("ul_p95_dbm_max", c.orchestrator.ul_p95_dbm_max); });
    v.object("telemetry", [&](auto& t) {
        t.field("qoe_window_s", c.telemetry.qoe_window_s);
        t.field("load_window_s", c.telemetry.load_window_s);
        t.field("energy_window_s", c.telemetry.energy_window_s);
        t.field("retention_s", c.telemetry.retention_s);
        t.field("outcome_lag_s", c.outcome_lag_s);
        t.field("outcome_dead_band", c.outcome_dead_band);
    });
    v.object("xapps", [&](auto& x) {
        x.field("load_top_k", c.orchestrator.load.top_k);
        x.field("load_reciprocal", c.orchestrator.load.reciprocal);
        x.field("load_unwind", c.orchestrator.load.unwind);
        x.field("cluster_prb_high", c.orchestrator.energy.cluster_prb_high);
        x.field("sleep_cooldown_s", c.orchestrator.energy.sleep_cooldown_s);
        x.field("republish_deadband", c.orchestrator.republish_deadband);
    });
    v.object("apt", [&](auto& a) {
        a.field("enabled", c.apt.enabled);
        a.field("cadence_s", c.apt.cadence_s);
        a.field("step_fraction", c.apt.step_fraction);
        a.field("ema", c.apt.ema);
        a.field("ema_alpha", c.apt.ema_alpha);
        a.field("persist_windows", c.apt.persist_windows);
        a.field("churn_factor", c.apt.churn_factor);
        a.field("force_all_rules", c.apt.force_all_rules);
    });
}

}  // namespace

void RunConfig::validate() const {
    ScenarioConfig s = scenario;
    if (s.phases.empty()) s.phases = ScenarioConfig::default_phases(s.duration_s);
    s.validate();
    orchestrator.intent.validate();
    orchestrator.deadlines.validate();
    try {
        guardrails.check();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    if (guardrails.offset_clamp_max_db != scenario.offset_clamp_db)
        throw ParseError("guardrails.offset_clamp_max_db must equal scenario.offset_clamp_db");
    if (provider.kind != "stub" && provider.kind != "timeout" && provider.kind != "invalid" && provider.kind != "http")
        throw ParseError(fmt::format("provider.kind: unknown provider '{}'", provider.kind));
    if (!(telemetry.qoe_window_s > 0 && telemetry.load_window_s > 0)) throw ParseError("telemetry: windows must be positive");
    if (!(outcome_lag_s > 0)) throw ParseError("telemetry.outcome_lag_s must be positive");
    if (orchestrator.load.top_k < 1) throw ParseError("xapps.load_top_k must be at least 1");
}

RunConfig config_from_json(const Json& j) {
    RunConfig c;
    Reader r(j, "");
    visit_run(r, c);
    r.done();
    c.orchestrator.qoe_window_s = c.telemetry.qoe_window_s;
    c.orchestrator.load_window_s = c.telemetry.load_window_s;
    c.apt.load_window_s = c.telemetry.load_window_s;
    if (c.scenario.phases.empty()) c.scenario.phases = ScenarioConfig::default_phases(c.scenario.duration_s);
    c.validate();
    return c;
}

Json config_to_json(const RunConfig& cfg) {
    RunConfig c = cfg;
    Json j;
    Writer w(j);
    visit_run(w, c);
    return j;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError(fmt::format("{}: cannot open", file.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(fmt::format("{}:{}:{}: malformed JSON", file.string(), line, col));
    }
    try {
        return config_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
    }
}

void save_config(const RunConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << config_to_json(cfg).dump(2) << '\n';
    if (!out) throw StorageError("cannot write " + file.string());
}

std::uint64_t scenario_digest(const RunConfig& cfg) {
    Json j = config_to_json(cfg)["scenario"];
    j.erase("seed");
    return fnv1a64(j.dump());
}

}  // namespace ranctl
