#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ranctl/actions.hpp"
#include "ranctl/audit.hpp"
#include "ranctl/intent_provider.hpp"
#include "ranctl/policy.hpp"
#include "ranctl/telemetry.hpp"
#include "ranctl/xapp_common.hpp"
#include "ranctl/xapp_energy.hpp"
#include "ranctl/xapp_load.hpp"

namespace ranctl {

enum class PlayName { QoeFirst, LoadFirst, EnergyFirst };

std::string_view to_string(PlayName p);
std::optional<PlayName> play_from_string(std::string_view name);

struct FieldPreset {
    double conservative{0.0};  // value at agent weight 0
    double aggressive{0.0};    // value at agent weight 1
};

struct Play {
    PlayName name{PlayName::LoadFirst};
    std::map<std::string, FieldPreset> presets;
    bool unwind_offsets{false};
};

// Built-in preset bundles. Every intent- and APT-lineage field has a preset.
const Play& builtin_play(PlayName name);

struct Intent {
    std::string text{"protect UE 1 and keep PRB under 85%"};
    std::set<UeId> protected_ues{1};
    double prb_ceiling{0.85};
    std::map<Phase, PlayName> phase_overrides;

    // Throws ParseError when prb_ceiling is outside (0, 1].
    void validate() const;
};

// Coarse signals the play selector and the fallback blend both key on.
struct CoarseSignals {
    bool hotspot{false};  // some cell above hot_prb
    bool quiet{false};    // every cell with data below quiet_prb
};

inline constexpr double kQuietPrb = 0.3;

CoarseSignals coarse_signals(const KpiView& view, double hot_prb);

// emergency -> qoe_first; normal -> energy_first when quiet, else load_first;
// recovery -> load_first while a hotspot remains, else energy_first.
// phase_overrides win.
PlayName select_play(Phase phase, const KpiView& coarse_view, const Intent& intent, double hot_prb);

// cio_step_db = 0.5 + w_load, dl_target_mbps = 0.3 + 0.5 w_qoe; every other
// preset field moves linearly from conservative to aggressive with its agent's
// weight. hot_prb never exceeds the intent's prb_ceiling. Platform fields are
// not produced.
std::map<Agent, FieldValues> translate_intent(const IntentWeights& weights, const Play& play,
                                              const Intent& intent = {});

// Higher priority first: Energy, QoE, Load.
int priority_rank(Agent a);

struct MergeResult {
    std::vector<ActionProposal> accepted;  // sorted by (priority, subject key)
    std::vector<Decision> rejected;        // guard "deduped"
};

// One winner per subject key. Within a key the highest-priority source wins;
// ties go to the lowest subject id, then the earliest t_proposed, then the
// remaining fields. Independent of input order.
MergeResult merge(std::vector<ActionProposal> proposals);

// Dispatcher-side view of the RAN used by the guards. Updated as actions are
// accepted, so later actions in a batch see earlier ones.
struct GuardState {
    OffsetTable offsets;
    std::map<CellId, std::deque<Seconds>> offset_steps;  // dispatch times per owning cell
    std::map<std::pair<CellId, CellId>, Seconds> pair_last_step;
    std::map<UeId, Seconds> last_xapp_ho;
    std::map<CellId, bool> cell_active;

    double offset(CellId a, CellId b) const;
    bool active(CellId c) const;
};

struct GuardInputs {
    Seconds now{0.0};
    const KpiView* view{nullptr};  // per-UE dwell, serving cell and native HO times
    QoePolicy qoe;
    const GuardrailSpec* spec{nullptr};
    const CellTopology* topology{nullptr};
};

// Applies the guards to merged actions in order and routes survivors onto
// their plane. Refusals are data: each carries its guard name.
DispatchBatch enforce_guards(const std::vector<ActionProposal>& accepted, GuardState& state, const GuardInputs& in);

struct OrchestratorConfig {
    Intent intent;
    ProviderDeadlines deadlines;
    double ul_p95_dbm_max{-80.0};  // platform-owned
    Seconds qoe_window_s{5.0};
    Seconds load_window_s{30.0};
    LoadOptions load;
    EnergyOptions energy;
    double republish_deadband{0.01};  // fraction of each field's range
    // L2 and APT publication is suppressed for t in [start, end) when set.
    // TTL reverts still apply.
    std::optional<std::pair<Seconds, Seconds>> publication_freeze;

    bool frozen(Seconds t) const {
        return publication_freeze && t >= publication_freeze->first && t < publication_freeze->second;
    }
};

struct TickStats {
    std::uint64_t ticks{0};
    std::map<Agent, std::uint64_t> xapp_ticks;
    std::map<Agent, std::uint64_t> xapp_failures;
    std::uint64_t l2_fallbacks{0};
    std::uint64_t publications{0};
};

class Orchestrator {
public:
    // Publishes the default policy for any agent the store does not know yet.
    Orchestrator(OrchestratorConfig cfg, PolicyStore& store, const Telemetry& telemetry, CellTopology topology,
                 AuditLog* audit, IntentProvider* provider, std::uint64_t seed);

    // One non-RT control tick at logical time `now`.
    DispatchBatch tick(Seconds now, Phase phase);

    const GuardState& guard_state() const { return guards_; }
    const TickStats& stats() const { return stats_; }
    PlayName last_play() const { return last_play_; }
    const IntentWeights& last_weights() const { return last_weights_; }
    const CellTopology& topology() const { return topology_; }
    const OrchestratorConfig& config() const { return cfg_; }

private:
    void refresh_guard_state(const KpiView& view);
    IntentWeights blend(Seconds now, Phase phase, PlayName play, const KpiView& load_view, double hot_prb);
    void publish_targets(Seconds now, const std::map<Agent, FieldValues>& targets);
    std::vector<ActionProposal> collect(Seconds now, const KpiView& qoe_view, const KpiView& load_view,
                                        const KpiView& energy_view, const Play& play);
    void audit_batch(Seconds now, const std::vector<ActionProposal>& proposals, const MergeResult& merged,
                     const DispatchBatch& batch);
    FieldValues current_values(Agent agent) const;

    OrchestratorConfig cfg_;
    PolicyStore& store_;
    const Telemetry& telemetry_;
    CellTopology topology_;
    AuditLog* audit_;
    IntentProvider* provider_;
    std::uint64_t seed_;
    GuardState guards_;
    TickStats stats_;
    PlayName last_play_{PlayName::LoadFirst};
    IntentWeights last_weights_;
    std::uint64_t next_id_{1};
};

// Default field values for an agent (the catalog defaults).
FieldValues default_values(Agent agent);

}  // namespace ranctl
