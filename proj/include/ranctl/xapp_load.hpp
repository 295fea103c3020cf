#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ranctl/actions.hpp"
#include "ranctl/policy.hpp"
#include "ranctl/telemetry.hpp"
#include "ranctl/xapp_common.hpp"

namespace ranctl {

struct HotCoolPair {
    CellId hot{-1};
    CellId cool{-1};
    double gap{0.0};

    bool operator==(const HotCoolPair&) const = default;
};

using PairOrder = std::vector<std::pair<CellId, CellId>>;

struct LoadOptions {
    int top_k{1};
    // Also step the reverse entry (cool -> hot) by -cio_step so offloaded UEs
    // do not bounce straight back.
    bool reciprocal{false};
    // Step existing offsets back toward 0 on pairs where neither cell is hot.
    bool unwind{false};
    // Pairs whose offset cannot grow and that have no elephant do not use a top_k slot.
    double offset_clamp_db{6.0};
};

// Hot/cool adjacent pairs, gap descending, ties by (hot, cool).
std::vector<HotCoolPair> find_pairs(const KpiView& view, const LoadPolicy& policy, const CellTopology& topology);

// Pairs named by the hint move to the front in hint order; the rest follow in
// their original order. A hint naming an unknown pair or repeating one is
// ignored.
std::vector<HotCoolPair> stable_merge_order(const std::vector<HotCoolPair>& pairs, const PairOrder& hint);

// Elephant fallback: UE served by `hot` with the largest DL share, median
// SINR >= 0 dB that also measures `cool` at >= kMinServiceSinrDb.
std::optional<UeId> base_elephant(const KpiView& view, CellId hot, CellId cool);

std::vector<ActionProposal> load_tick(const KpiView& view, const LoadPolicy& policy, const XappContext& ctx,
                                      const LoadOptions& options = {});

}  // namespace ranctl
