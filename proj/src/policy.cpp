#include "ranctl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

namespace ranctl {

namespace {

template <typename Policy>
struct FieldRef {
    const char* name;
    double Policy::*member;
};

constexpr std::array<FieldRef<QoePolicy>, 5> kQoeFields{{
    {"dl_target_mbps", &QoePolicy::dl_target_mbps},
    {"sinr_target_db", &QoePolicy::sinr_target_db},
    {"headroom_min", &QoePolicy::headroom_min},
    {"min_dwell_s", &QoePolicy::min_dwell_s},
    {"ue_ban_s", &QoePolicy::ue_ban_s},
}};

constexpr std::array<FieldRef<LoadPolicy>, 6> kLoadFields{{
    {"hot_prb", &LoadPolicy::hot_prb},
    {"cool_prb", &LoadPolicy::cool_prb},
    {"cio_step_db", &LoadPolicy::cio_step_db},
    {"mcs_min", &LoadPolicy::mcs_min},
    {"ul_p95_dbm_max", &LoadPolicy::ul_p95_dbm_max},
    {"ue_ban_s", &LoadPolicy::ue_ban_s},
}};

constexpr std::array<FieldRef<EnergyPolicy>, 7> kEnergyFields{{
    {"idle_window_min", &EnergyPolicy::idle_window_min},
    {"idle_prb_max", &EnergyPolicy::idle_prb_max},
    {"idle_sched_mbps_max", &EnergyPolicy::idle_sched_mbps_max},
    {"idle_ue_max", &EnergyPolicy::idle_ue_max},
    {"wake_ue_min", &EnergyPolicy::wake_ue_min},
    {"wake_sched_mbps_min", &EnergyPolicy::wake_sched_mbps_min},
    {"ho_arrival_max_hz", &EnergyPolicy::ho_arrival_max_hz},
}};

template <typename Policy, std::size_t N>
FieldValues to_fields_impl(const Policy& p, const std::array<FieldRef<Policy>, N>& refs) {
    FieldValues out;
    for (const auto& r : refs) out[r.name] = p.*(r.member);
    return out;
}

template <typename Policy, std::size_t N>
Policy from_fields_impl(const FieldValues& v, const std::array<FieldRef<Policy>, N>& refs) {
    Policy p;
    for (const auto& r : refs) {
        auto it = v.find(r.name);
        if (it == v.end()) throw Error(std::string("policy: missing field ") + r.name);
        p.*(r.member) = it->second;
    }
    return p;
}

struct CatalogRow {
    const char* name;
    const char* unit;
    FieldKind kind;
    Lineage lineage;
    bool integral;
};

// Field, unit, kind, lineage as catalogued for A1.
constexpr std::array<CatalogRow, 17> kCatalog{{
    {"dl_target_mbps", "Mbps", FieldKind::Threshold, Lineage::IntentL2, false},
    {"sinr_target_db", "dB", FieldKind::Threshold, Lineage::IntentL2, false},
    {"headroom_min", "fraction", FieldKind::Threshold, Lineage::Apt, false},
    {"min_dwell_s", "s", FieldKind::Guard, Lineage::Apt, false},
    {"ue_ban_s", "s", FieldKind::Cooldown, Lineage::Apt, false},
    {"hot_prb", "fraction", FieldKind::Threshold, Lineage::IntentL2, false},
    {"cool_prb", "fraction", FieldKind::Threshold, Lineage::Apt, false},
    {"cio_step_db", "dB", FieldKind::OffsetStep, Lineage::Apt, false},
    {"mcs_min", "index", FieldKind::Guard, Lineage::Apt, true},
    {"ul_p95_dbm_max", "dBm", FieldKind::Guard, Lineage::Platform, false},
    {"idle_window_min", "min", FieldKind::Window, Lineage::Apt, false},
    {"idle_prb_max", "fraction", FieldKind::Threshold, Lineage::Apt, false},
    {"idle_sched_mbps_max", "Mbps", FieldKind::Threshold, Lineage::Apt, false},
    {"idle_ue_max", "count", FieldKind::Threshold, Lineage::IntentL2, true},
    {"wake_ue_min", "count", FieldKind::Threshold, Lineage::Apt, true},
    {"wake_sched_mbps_min", "Mbps", FieldKind::Threshold, Lineage::Apt, false},
    {"ho_arrival_max_hz", "1/s", FieldKind::Guard, Lineage::Apt, false},
}};

const CatalogRow* catalog_row(std::string_view name) {
    for (const auto& r : kCatalog)
        if (name == r.name) return &r;
    return nullptr;
}

std::vector<FieldDescriptor> descriptors(std::initializer_list<const char*> names) {
    std::vector<FieldDescriptor> out;
    for (const char* n : names) {
        const CatalogRow* r = catalog_row(n);
        out.push_back({r->name, r->unit, r->kind, r->integral});
    }
    return out;
}

bool is_integral(std::string_view name) {
    const CatalogRow* r = catalog_row(name);
    return r && r->integral;
}

}  // namespace

std::string_view to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Threshold: return "threshold";
        case FieldKind::Guard: return "guard";
        case FieldKind::Cooldown: return "cooldown";
        case FieldKind::OffsetStep: return "offset_step";
        case FieldKind::Window: return "window";
    }
    return "?";
}

std::string_view to_string(PolicySource s) {
    switch (s) {
        case PolicySource::IntentL2: return "Intent-L2";
        case PolicySource::Apt: return "APT";
        case PolicySource::Platform: return "Platform";
        case PolicySource::Default: return "Default";
    }
    return "?";
}

FieldValues QoePolicy::to_fields() const { return to_fields_impl(*this, kQoeFields); }
QoePolicy QoePolicy::from_fields(const FieldValues& v) { return from_fields_impl<QoePolicy>(v, kQoeFields); }
FieldValues LoadPolicy::to_fields() const { return to_fields_impl(*this, kLoadFields); }
LoadPolicy LoadPolicy::from_fields(const FieldValues& v) { return from_fields_impl<LoadPolicy>(v, kLoadFields); }
FieldValues EnergyPolicy::to_fields() const { return to_fields_impl(*this, kEnergyFields); }
EnergyPolicy EnergyPolicy::from_fields(const FieldValues& v) {
    return from_fields_impl<EnergyPolicy>(v, kEnergyFields);
}

const std::vector<FieldDescriptor>& catalog_schema(Agent agent) {
    static const std::vector<FieldDescriptor> qoe =
        descriptors({"dl_target_mbps", "sinr_target_db", "headroom_min", "min_dwell_s", "ue_ban_s"});
    static const std::vector<FieldDescriptor> load =
        descriptors({"hot_prb", "cool_prb", "cio_step_db", "mcs_min", "ul_p95_dbm_max", "ue_ban_s"});
    static const std::vector<FieldDescriptor> energy =
        descriptors({"idle_window_min", "idle_prb_max", "idle_sched_mbps_max", "idle_ue_max", "wake_ue_min",
                     "wake_sched_mbps_min", "ho_arrival_max_hz"});
    switch (agent) {
        case Agent::Qoe: return qoe;
        case Agent::Load: return load;
        case Agent::Energy: return energy;
    }
    return qoe;
}

Lineage lineage_of(std::string_view field) {
    const CatalogRow* r = catalog_row(field);
    if (!r) throw Error("policy: unknown field " + std::string(field));
    return r->lineage;
}

bool is_catalog_field(std::string_view field) { return catalog_row(field) != nullptr; }

Json PolicyInstance::to_json() const {
    Json j;
    j["agent"] = std::string(to_string(agent));
    j["version"] = version;
    j["issued_at"] = issued_at;
    j["source"] = std::string(to_string(source));
    if (ttl_s) j["ttl_s"] = *ttl_s;
    Json v = Json::object();
    for (const auto& [k, x] : values) v[k] = x;
    j["values"] = v;
    return j;
}

GuardrailSpec GuardrailSpec::defaults() {
    GuardrailSpec s;
    auto add = [&](const char* name, double lo, double hi) {
        double step = 0.1 * (hi - lo);
        if (is_integral(name)) step = std::max(1.0, std::ceil(step));
        s.fields[name] = FieldGuard{lo, hi, step, 120.0};
    };
    add("dl_target_mbps", 0.3, 0.8);
    add("sinr_target_db", -3.0, 6.0);
    add("headroom_min", 0.05, 0.30);
    add("min_dwell_s", 1.0, 10.0);
    add("ue_ban_s", 5.0, 30.0);
    add("hot_prb", 0.70, 0.95);
    add("cool_prb", 0.30, 0.60);
    add("cio_step_db", 0.5, 1.5);
    add("mcs_min", 0.0, 15.0);
    add("ul_p95_dbm_max", -120.0, -60.0);
    add("idle_window_min", 1.0, 10.0);
    add("idle_prb_max", 0.01, 0.10);
    add("idle_sched_mbps_max", 0.05, 0.5);
    add("idle_ue_max", 0.0, 2.0);
    add("wake_ue_min", 1.0, 5.0);
    add("wake_sched_mbps_min", 0.6, 5.0);
    add("ho_arrival_max_hz", 0.0, 0.1);
    return s;
}

const FieldGuard& GuardrailSpec::guard(const std::string& field) const {
    auto it = fields.find(field);
    if (it == fields.end()) throw Error("guardrails: no range for field " + field);
    return it->second;
}

void GuardrailSpec::check() const {
    for (const auto& [name, g] : fields) {
        if (!(g.min <= g.max)) throw Error("guardrails: min > max for " + name);
        if (!(g.max_step_per_edit > 0)) throw Error("guardrails: max_step_per_edit must be positive for " + name);
        if (!(g.edit_cooldown_s >= 0)) throw Error("guardrails: negative edit_cooldown_s for " + name);
    }
    if (!(offset_clamp_min_db < 0 && offset_clamp_max_db > 0 && offset_clamp_min_db == -offset_clamp_max_db))
        throw Error("guardrails: offset clamp must be symmetric around 0");
    if (budget_offset_steps <= 0 || !(budget_window_s > 0)) throw Error("guardrails: budgets must be positive");
    if (min_active_cells_per_site <= 0) throw Error("guardrails: min_active_cells_per_site must be positive");
    if (!(global_dwell_floor_s > 0) || !(offset_cooldown_s >= 0))
        throw Error("guardrails: dwell floor / offset cooldown out of range");
}

SchemaHandle SchemaRegistry::register_schema(Agent agent, std::vector<FieldDescriptor> fields) {
    if (fields.empty()) throw Error(fmt::format("schema: empty-schema for {}", to_string(agent)));
    if (schemas_.contains(agent)) throw Error(fmt::format("schema: duplicate registration for {}", to_string(agent)));
    SchemaHandle h{agent, fields.size()};
    schemas_.emplace(agent, std::move(fields));
    return h;
}

const std::vector<FieldDescriptor>& SchemaRegistry::schema(Agent agent) const {
    auto it = schemas_.find(agent);
    if (it == schemas_.end()) throw Error(fmt::format("schema: {} not registered", to_string(agent)));
    return it->second;
}

ValidationResult SchemaRegistry::validate(const PolicyInstance& inst, const GuardrailSpec& spec) const {
    const auto& fields = schema(inst.agent);
    ValidationResult res;
    for (const auto& [name, value] : inst.values) {
        bool known = std::any_of(fields.begin(), fields.end(), [&](const auto& d) { return d.name == name; });
        if (!known) res.violations.push_back({name, value, "unknown-field"});
    }
    for (const auto& d : fields) {
        auto it = inst.values.find(d.name);
        if (it == inst.values.end()) {
            res.violations.push_back({d.name, 0.0, "missing-field"});
            continue;
        }
        const double v = it->second;
        if (!std::isfinite(v)) {
            res.violations.push_back({d.name, v, "non-finite"});
            continue;
        }
        if (d.integral && v != std::round(v)) res.violations.push_back({d.name, v, "integral"});
        auto g = spec.fields.find(d.name);
        if (g == spec.fields.end()) continue;
        if (v < g->second.min) res.violations.push_back({d.name, v, fmt::format("min {}", g->second.min)});
        if (v > g->second.max) res.violations.push_back({d.name, v, fmt::format("max {}", g->second.max)});
    }
    auto get = [&](const char* k) -> std::optional<double> {
        auto it = inst.values.find(k);
        return it == inst.values.end() ? std::nullopt : std::optional<double>(it->second);
    };
    auto cross = [&](const char* lo, const char* hi) {
        auto a = get(lo);
        auto b = get(hi);
        if (a && b && !(*a < *b)) res.violations.push_back({lo, *a, fmt::format("below {} {}", hi, *b)});
    };
    if (inst.agent == Agent::Load) {
        cross("cool_prb", "hot_prb");
        if (auto s = get("cio_step_db"); s && !(*s > 0)) res.violations.push_back({"cio_step_db", *s, "positive"});
    }
    if (inst.agent == Agent::Energy) {
        cross("idle_ue_max", "wake_ue_min");
        cross("idle_sched_mbps_max", "wake_sched_mbps_min");
    }
    return res;
}

SchemaRegistry catalog_registry() {
    SchemaRegistry r;
    for (Agent a : kAgents) r.register_schema(a, catalog_schema(a));
    return r;
}

FieldValues clamp_rate_limit(const FieldValues& proposed, const FieldValues& previous, const GuardrailSpec& spec,
                             const EditClock& last_edit, Seconds now) {
    FieldValues out;
    for (const auto& [name, raw] : proposed) {
        auto g = spec.fields.find(name);
        double v = raw;
        if (g == spec.fields.end()) {
            out[name] = v;
            continue;
        }
        const FieldGuard& fg = g->second;
        v = std::clamp(v, fg.min, fg.max);
        const bool integral = is_integral(name);
        if (integral) v = std::round(v);
        auto prev = previous.find(name);
        if (prev == previous.end()) {
            out[name] = v;
            continue;
        }
        const double old = prev->second;
        if (auto e = last_edit.find(name); e != last_edit.end() && now - e->second < fg.edit_cooldown_s) {
            out[name] = old;
            continue;
        }
        const double delta = v - old;
        if (std::abs(delta) > fg.max_step_per_edit) {
            double step = fg.max_step_per_edit;
            if (integral) step = std::max(1.0, std::floor(step));
            v = old + (delta > 0 ? step : -step);
            v = std::clamp(v, fg.min, fg.max);
        }
        out[name] = v;
    }
    return out;
}

PolicyStore::PolicyStore(SchemaRegistry registry, GuardrailSpec spec, AuditLog* audit)
    : registry_(std::move(registry)), spec_(std::move(spec)), audit_(audit) {
    spec_.check();
}

std::shared_ptr<const PolicyInstance> PolicyStore::latest(Agent agent) const {
    auto it = latest_.find(agent);
    return it == latest_.end() ? nullptr : it->second;
}

std::uint64_t PolicyStore::version(Agent agent) const {
    auto cur = latest(agent);
    return cur ? cur->version : 0;
}

namespace {

Json violations_json(const ValidationResult& v) {
    Json arr = Json::array();
    for (const auto& x : v.violations) {
        Json j;
        j["field"] = x.field;
        j["value"] = x.value;
        j["bound"] = x.bound;
        arr.push_back(j);
    }
    return arr;
}

Json changes_json(const std::vector<FieldChange>& changes) {
    Json j = Json::object();
    for (const auto& c : changes) j[c.field] = Json::array({c.old_value, c.new_value});
    return j;
}

}  // namespace

PublishResult PolicyStore::publish(PolicyInstance instance, std::string reason) {
    PublishResult res;
    res.validation = registry_.validate(instance, spec_);
    auto current = latest(instance.agent);
    if (!res.validation.ok()) {
        res.version = current ? current->version : 0;
        if (audit_) {
            Json p;
            p["agent"] = std::string(to_string(instance.agent));
            p["source"] = std::string(to_string(instance.source));
            p["violations"] = violations_json(res.validation);
            audit_->append(instance.issued_at, AuditSource::RApp, AuditKind::Refuse, p, "validation failed");
        }
        return res;
    }
    instance.version = (current ? current->version : 0) + 1;
    for (const auto& [name, v] : instance.values) {
        double old = v;
        if (current) {
            auto it = current->values.find(name);
            if (it != current->values.end()) old = it->second;
        }
        if (!current || old != v) {
            if (current) res.changes.push_back({name, old, v});
            if (instance.source == PolicySource::Apt) edit_clock_[name] = instance.issued_at;
        }
    }
    if (instance.ttl_s && current) {
        FieldValues restore;
        for (const auto& c : res.changes) restore[c.field] = c.old_value;
        if (!restore.empty())
            pending_.push_back({instance.agent, instance.issued_at + *instance.ttl_s, current->source, restore});
    }
    res.published = true;
    res.version = instance.version;
    auto snapshot = std::make_shared<const PolicyInstance>(std::move(instance));
    latest_[snapshot->agent] = snapshot;
    if (audit_) {
        Json p = snapshot->to_json();
        p["changes"] = changes_json(res.changes);
        audit_->append(snapshot->issued_at, AuditSource::RApp, AuditKind::Publish, p, reason);
    }
    return res;
}

std::vector<TtlRevert> PolicyStore::expire(Seconds now) {
    std::vector<TtlRevert> out;
    std::vector<Pending> keep;
    for (auto& p : pending_) {
        if (p.due > now) {
            keep.push_back(std::move(p));
            continue;
        }
        auto current = latest(p.agent);
        PolicyInstance inst = *current;
        TtlRevert rev{p.agent, current->version + 1, {}};
        for (const auto& [name, v] : p.restore) {
            const double cur = inst.values.at(name);
            if (cur != v) rev.changes.push_back({name, cur, v});
            inst.values[name] = v;
            edit_clock_[name] = now;
        }
        inst.version = rev.version;
        inst.issued_at = now;
        inst.source = p.restore_source;
        inst.ttl_s.reset();
        auto snapshot = std::make_shared<const PolicyInstance>(std::move(inst));
        latest_[p.agent] = snapshot;
        if (audit_) {
            Json j = snapshot->to_json();
            j["changes"] = changes_json(rev.changes);
            audit_->append(now, AuditSource::RApp, AuditKind::TtlRevert, j, "ttl expired");
        }
        out.push_back(std::move(rev));
    }
    pending_ = std::move(keep);
    return out;
}

}  // namespace ranctl
