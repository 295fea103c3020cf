#include "ranctl/actions.hpp"
#include "ranctl/common.hpp"

namespace ranctl {

std::string_view to_string(Agent agent) {
    switch (agent) {
        case Agent::Qoe: return "QoE";
        case Agent::Load: return "Load";
        case Agent::Energy: return "Energy";
    }
    return "?";
}

std::optional<Agent> agent_from_string(std::string_view name) {
    if (name == "QoE" || name == "qoe") return Agent::Qoe;
    if (name == "Load" || name == "load") return Agent::Load;
    if (name == "Energy" || name == "energy") return Agent::Energy;
    return std::nullopt;
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::Normal: return "normal";
        case Phase::Emergency: return "emergency";
        case Phase::Recovery: return "recovery";
    }
    return "?";
}

std::optional<Phase> phase_from_string(std::string_view name) {
    if (name == "normal") return Phase::Normal;
    if (name == "emergency") return Phase::Emergency;
    if (name == "recovery") return Phase::Recovery;
    return std::nullopt;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string_view to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::Ho: return "ho";
        case ActionKind::OffsetStep: return "offset_step";
        case ActionKind::Sleep: return "sleep";
        case ActionKind::Wake: return "wake";
    }
    return "?";
}

ActionKind action_kind_from_string(std::string_view name) {
    if (name == "ho") return ActionKind::Ho;
    if (name == "offset_step") return ActionKind::OffsetStep;
    if (name == "sleep") return ActionKind::Sleep;
    if (name == "wake") return ActionKind::Wake;
    throw ParseError("unknown action kind '" + std::string(name) + "'");
}

ActionProposal ActionProposal::ho(Agent src, UeId ue, CellId from, CellId to, std::string why, Seconds t) {
    ActionProposal p;
    p.source = src;
    p.kind = ActionKind::Ho;
    p.ue = ue;
    p.cell = from;
    p.target = to;
    p.reason = std::move(why);
    p.t_proposed = t;
    return p;
}

ActionProposal ActionProposal::offset(Agent src, CellId cell, CellId neighbor, double step, std::string why,
                                      Seconds t) {
    ActionProposal p;
    p.source = src;
    p.kind = ActionKind::OffsetStep;
    p.cell = cell;
    p.target = neighbor;
    p.step_db = step;
    p.reason = std::move(why);
    p.t_proposed = t;
    return p;
}

ActionProposal ActionProposal::sleep(Agent src, CellId cell, std::string why, Seconds t) {
    ActionProposal p;
    p.source = src;
    p.kind = ActionKind::Sleep;
    p.cell = cell;
    p.reason = std::move(why);
    p.t_proposed = t;
    return p;
}

ActionProposal ActionProposal::wake(Agent src, CellId cell, std::string why, Seconds t) {
    ActionProposal p = sleep(src, cell, std::move(why), t);
    p.kind = ActionKind::Wake;
    return p;
}

SubjectKey subject_key(const ActionProposal& p) {
    switch (p.kind) {
        case ActionKind::Ho: return {0, p.ue, 0};
        case ActionKind::OffsetStep: return {2, p.cell, p.target};
        case ActionKind::Sleep:
        case ActionKind::Wake: return {1, p.cell, 0};
    }
    return {};
}

bool well_formed(const ActionProposal& p) {
    switch (p.kind) {
        case ActionKind::Ho: return p.ue >= 0 && p.target >= 0;
        case ActionKind::OffsetStep: return p.cell >= 0 && p.target >= 0 && p.cell != p.target;
        case ActionKind::Sleep:
        case ActionKind::Wake: return p.cell >= 0;
    }
    return false;
}

}  // namespace ranctl
