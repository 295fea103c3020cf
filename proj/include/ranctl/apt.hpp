#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ranctl/audit.hpp"
#include "ranctl/policy.hpp"
#include "ranctl/telemetry.hpp"

namespace ranctl {

enum class TuneDirection { Increase, Decrease };

struct TunerRule {
    std::string name;
    std::string target_field;
    TuneDirection direction{TuneDirection::Decrease};
    double step{0.5};  // fraction of max_step_per_edit
};

struct TunerEdit {
    std::string field;
    double old_value{0.0};
    double new_value{0.0};
    std::string reason;
    Seconds t{0.0};
    std::optional<Seconds> ttl_s;
    bool ema_applied{false};
};

// The six default rules, in evaluation order, each stepping by `step` of the
// field's max_step_per_edit.
std::vector<TunerRule> rule_set(double step = 0.5);

// old + alpha (proposed - old). Throws Error unless alpha is in (0, 1].
double ema_smooth(double old_value, double proposed, double alpha);

struct AptConfig {
    bool enabled{true};
    Seconds cadence_s{45.0};
    double step_fraction{0.5};
    bool ema{false};
    double ema_alpha{0.3};
    int persist_windows{3};
    Seconds load_window_s{30.0};
    double churn_factor{2.0};
    int pingpong_min{2};
    int reversion_min{2};
    // Treat every trigger as fired. Used to stress the edit bounds.
    bool force_all_rules{false};
};

// What the trigger predicates saw on one cycle.
struct AptEvidence {
    bool qoe_shortfall{false};
    int qoe_outcomes{0};
    int qoe_improved{0};
    int pingpongs{0};
    int pingpongs_prev{0};
    std::optional<CellId> overloaded_cell;
    int overload_steps{0};
    double ho_rate_hz{0.0};
    double ho_rate_trailing_hz{0.0};
    int sleep_reversions{0};
    std::optional<CellId> idle_tail_cell;
};

class Apt {
public:
    Apt(AptConfig cfg, PolicyStore& store, Telemetry& telemetry, AuditLog* audit = nullptr);

    bool due(Seconds now) const;
    // Runs a cycle when due; emergency-phase edits carry ttl = phase_end - now.
    std::vector<TunerEdit> maybe_cycle(Seconds now, Phase phase, Seconds phase_end);
    // Runs a cycle unconditionally.
    std::vector<TunerEdit> cycle(Seconds now, Phase phase, Seconds phase_end);

    AptEvidence gather(Seconds now) const;
    bool fires(const TunerRule& rule, const AptEvidence& ev) const;

    std::uint64_t cycles() const { return cycles_; }
    const std::vector<TunerEdit>& edits() const { return edits_; }
    const AptConfig& config() const { return cfg_; }

private:
    int count_pingpongs(Seconds from, Seconds to, Seconds horizon) const;

    AptConfig cfg_;
    PolicyStore& store_;
    Telemetry& telemetry_;
    AuditLog* audit_;
    std::optional<Seconds> last_cycle_;
    std::uint64_t cycles_{0};
    std::vector<double> ho_rates_;  // per past cycle
    std::vector<TunerEdit> edits_;
};

}  // namespace ranctl
