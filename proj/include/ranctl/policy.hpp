#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ranctl/audit.hpp"
#include "ranctl/common.hpp"

namespace ranctl {

// Typed A1 policy fields. Names are the lower-snake-case field names used on
// the wire, in config files and in the audit stream.

enum class FieldKind { Threshold, Guard, Cooldown, OffsetStep, Window };
enum class Lineage { IntentL2, Apt, Platform };

std::string_view to_string(FieldKind kind);

struct FieldDescriptor {
    std::string name;
    std::string unit;
    FieldKind kind{FieldKind::Threshold};
    bool integral{false};
};

using FieldValues = std::map<std::string, double>;

struct QoePolicy {
    double dl_target_mbps{0.5};
    double sinr_target_db{0.0};
    double headroom_min{0.15};
    double min_dwell_s{3.0};
    double ue_ban_s{10.0};

    FieldValues to_fields() const;
    static QoePolicy from_fields(const FieldValues& v);
};

struct LoadPolicy {
    double hot_prb{0.85};
    double cool_prb{0.50};
    double cio_step_db{1.0};
    double mcs_min{3.0};
    double ul_p95_dbm_max{-80.0};
    double ue_ban_s{10.0};

    FieldValues to_fields() const;
    static LoadPolicy from_fields(const FieldValues& v);
};

struct EnergyPolicy {
    double idle_window_min{5.0};
    double idle_prb_max{0.05};
    double idle_sched_mbps_max{0.2};
    double idle_ue_max{0.0};
    double wake_ue_min{1.0};
    double wake_sched_mbps_min{1.0};
    double ho_arrival_max_hz{0.02};

    FieldValues to_fields() const;
    static EnergyPolicy from_fields(const FieldValues& v);
};

// The field catalog for each agent, in catalog order.
const std::vector<FieldDescriptor>& catalog_schema(Agent agent);
Lineage lineage_of(std::string_view field);
bool is_catalog_field(std::string_view field);

enum class PolicySource { IntentL2, Apt, Platform, Default };

std::string_view to_string(PolicySource s);

struct PolicyInstance {
    Agent agent{Agent::Qoe};
    FieldValues values;
    std::uint64_t version{0};
    Seconds issued_at{0.0};
    PolicySource source{PolicySource::Default};
    std::optional<Seconds> ttl_s;

    QoePolicy qoe() const { return QoePolicy::from_fields(values); }
    LoadPolicy load() const { return LoadPolicy::from_fields(values); }
    EnergyPolicy energy() const { return EnergyPolicy::from_fields(values); }

    Json to_json() const;
};

// IaC-owned envelope. Never edited through A1.
struct FieldGuard {
    double min{0.0};
    double max{0.0};
    double max_step_per_edit{0.0};
    Seconds edit_cooldown_s{120.0};
};

struct GuardrailSpec {
    std::map<std::string, FieldGuard> fields;
    double offset_clamp_min_db{-6.0};
    double offset_clamp_max_db{6.0};
    int budget_offset_steps{3};
    Seconds budget_window_s{60.0};
    Seconds offset_cooldown_s{5.0};
    int min_active_cells_per_site{1};
    Seconds global_dwell_floor_s{1.0};

    // Default ranges; max_step is 10% of range width (at least 1 for integral fields).
    static GuardrailSpec defaults();

    const FieldGuard& guard(const std::string& field) const;
    // Throws Error naming the first broken invariant.
    void check() const;
};

struct Violation {
    std::string field;
    double value{0.0};
    std::string bound;  // "max 1.5", "min 0.3", "unknown-field", "missing-field", ...
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

struct SchemaHandle {
    Agent agent{Agent::Qoe};
    std::size_t field_count{0};
};

class SchemaRegistry {
public:
    // Rejects empty descriptor lists and duplicate registration.
    SchemaHandle register_schema(Agent agent, std::vector<FieldDescriptor> fields);
    bool registered(Agent agent) const { return schemas_.contains(agent); }
    const std::vector<FieldDescriptor>& schema(Agent agent) const;

    // Throws Error if the agent has no schema.
    ValidationResult validate(const PolicyInstance& instance, const GuardrailSpec& spec) const;

private:
    std::map<Agent, std::vector<FieldDescriptor>> schemas_;
};

// Registers the catalog schema for all three agents.
SchemaRegistry catalog_registry();

using EditClock = std::map<std::string, Seconds>;

// Clamp every field into [min, max], cap |new - old| at max_step_per_edit and
// hold any field edited less than edit_cooldown_s ago. Integral fields round
// to the nearest integer before capping. Fields absent from `previous` pass
// through clamped.
FieldValues clamp_rate_limit(const FieldValues& proposed, const FieldValues& previous, const GuardrailSpec& spec,
                             const EditClock& last_edit, Seconds now);

struct FieldChange {
    std::string field;
    double old_value{0.0};
    double new_value{0.0};
};

struct PublishResult {
    bool published{false};
    std::uint64_t version{0};
    ValidationResult validation;
    std::vector<FieldChange> changes;
};

struct TtlRevert {
    Agent agent{Agent::Qoe};
    std::uint64_t version{0};
    std::vector<FieldChange> changes;
};

// Single-writer policy store: validates, versions and records publications.
// Readers take shared snapshots that never change underneath them.
class PolicyStore {
public:
    PolicyStore(SchemaRegistry registry, GuardrailSpec spec, AuditLog* audit = nullptr);

    // Version is assigned here (last + 1). Refusals leave the version unchanged
    // and are audited.
    PublishResult publish(PolicyInstance instance, std::string reason = {});

    std::shared_ptr<const PolicyInstance> latest(Agent agent) const;
    std::uint64_t version(Agent agent) const;

    // Restores pre-edit values for every TTL publication due at `now`.
    std::vector<TtlRevert> expire(Seconds now);

    // Time of the last APT edit (or TTL revert) per field.
    const EditClock& edit_clock() const { return edit_clock_; }
    const GuardrailSpec& spec() const { return spec_; }
    const SchemaRegistry& registry() const { return registry_; }
    bool has_pending_revert() const { return !pending_.empty(); }

private:
    struct Pending {
        Agent agent;
        Seconds due;
        PolicySource restore_source;
        FieldValues restore;
    };

    SchemaRegistry registry_;
    GuardrailSpec spec_;
    AuditLog* audit_;
    std::map<Agent, std::shared_ptr<const PolicyInstance>> latest_;
    EditClock edit_clock_;
    std::vector<Pending> pending_;
};

}  // namespace ranctl
