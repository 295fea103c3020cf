#include "ranctl/xapp_common.hpp"

#include <algorithm>

namespace ranctl {

bool CellTopology::adjacent(CellId a, CellId b) const {
    auto it = neighbors.find(a);
    return it != neighbors.end() && std::find(it->second.begin(), it->second.end(), b) != it->second.end();
}

std::vector<CellId> CellTopology::cells_at_site(SiteId site) const {
    std::vector<CellId> out;
    for (const auto& [cell, s] : site_of)
        if (s == site) out.push_back(cell);
    return out;
}

std::optional<Json> xapp_hint(const XappContext& ctx, PromptKind kind, Json context) {
    if (!ctx.provider) return std::nullopt;
    PromptRequest req{kind, std::move(context), ctx.deadline_ms, ctx.seed};
    PromptResponse r = ask(*ctx.provider, req);
    if (!r.valid) return std::nullopt;
    return std::move(r.payload);
}

}  // namespace ranctl
