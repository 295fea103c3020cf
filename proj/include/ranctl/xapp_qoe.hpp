#pragma once

#include <optional>
#include <vector>

#include "ranctl/actions.hpp"
#include "ranctl/policy.hpp"
#include "ranctl/telemetry.hpp"
#include "ranctl/xapp_common.hpp"

namespace ranctl {

struct QoeCandidate {
    CellId cell{-1};
    double sinr_db{0.0};
    double free_prb{0.0};
};

struct QoeCandidateSet {
    UeId ue{-1};
    std::vector<QoeCandidate> candidates;
    std::optional<CellId> n_base;
    std::optional<CellId> n_star;
};

// Fraction of offered DL a UE must get before a low rate counts as a shortfall.
inline constexpr double kQoeDeliveredFraction = 0.95;

// Neighbours from the UE's measurement list that are active, adjacent to the
// serving cell (when a topology is given), have free PRB >= headroom_min and
// SINR >= kMinServiceSinrDb.
std::vector<QoeCandidate> qoe_candidates(const UeAggregate& ue, const KpiView& view, const QoePolicy& policy,
                                         const CellTopology* topology);

// Lexicographic: sinr desc, free_prb desc, cell id asc.
std::optional<CellId> qoe_base_choice(const std::vector<QoeCandidate>& candidates);

// Ratio of free_prb * log2(1 + sinr) at the target to prb_share * log2(1 + sinr)
// at the serving cell; a rough throughput ratio. Infinite for an unserved UE.
double qoe_expected_gain(const UeAggregate& ue, const QoeCandidate& target);

// True when the UE needs help: a DL rate below target that the UE actually
// asked for, or a median SINR below target.
bool qoe_shortfall(const UeAggregate& ue, const QoePolicy& policy);

std::vector<ActionProposal> qoe_tick(const KpiView& view, const QoePolicy& policy, const XappContext& ctx);

}  // namespace ranctl
