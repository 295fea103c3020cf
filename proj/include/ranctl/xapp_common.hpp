#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ranctl/common.hpp"
#include "ranctl/intent_provider.hpp"

namespace ranctl {

// Targets measured below this cannot carry the lowest MCS with any margin.
inline constexpr double kMinServiceSinrDb = -5.0;

// Static RAN topology known to the controllers.
struct CellTopology {
    std::map<CellId, std::vector<CellId>> neighbors;
    std::map<CellId, SiteId> site_of;

    bool adjacent(CellId a, CellId b) const;
    std::vector<CellId> cells_at_site(SiteId site) const;
};

using OffsetTable = std::map<std::pair<CellId, CellId>, double>;

// What one xApp tick may consult besides its view and policy snapshot.
struct XappContext {
    Seconds now{0.0};
    IntentProvider* provider{nullptr};  // null: no hint, pure fallback
    double deadline_ms{100.0};
    std::uint64_t seed{0};
    const CellTopology* topology{nullptr};
    const OffsetTable* offsets{nullptr};
};

// Runs one provider query under the context deadline. Returns nullopt on
// timeout, invalid payload or missing provider.
std::optional<Json> xapp_hint(const XappContext& ctx, PromptKind kind, Json context);

}  // namespace ranctl
