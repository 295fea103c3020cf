#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ranctl/common.hpp"

namespace ranctl {

enum class ActionKind { Ho, OffsetStep, Sleep, Wake };

std::string_view to_string(ActionKind kind);
ActionKind action_kind_from_string(std::string_view name);

enum class Plane { E2, O1 };

inline Plane plane_of(ActionKind kind) {
    return (kind == ActionKind::Sleep || kind == ActionKind::Wake) ? Plane::O1 : Plane::E2;
}

// A proposed control action from one xApp.
//   ho          : ue -> target
//   offset_step : (cell, target) pair, step_db signed
//   sleep/wake  : cell
struct ActionProposal {
    Agent source{Agent::Qoe};
    ActionKind kind{ActionKind::Ho};
    UeId ue{-1};
    CellId cell{-1};
    CellId target{-1};
    double step_db{0.0};
    std::string reason;
    Seconds t_proposed{0.0};
    std::uint64_t id{0};

    static ActionProposal ho(Agent src, UeId ue, CellId from, CellId to, std::string why, Seconds t);
    static ActionProposal offset(Agent src, CellId cell, CellId neighbor, double step, std::string why,
                                 Seconds t);
    static ActionProposal sleep(Agent src, CellId cell, std::string why, Seconds t);
    static ActionProposal wake(Agent src, CellId cell, std::string why, Seconds t);

    bool operator==(const ActionProposal&) const = default;
};

// De-duplication key. HO keys on the UE, sleep/wake on the cell, offsets on the pair.
struct SubjectKey {
    int space{0};  // 0 = ue, 1 = cell, 2 = pair
    int a{0};
    int b{0};
    auto operator<=>(const SubjectKey&) const = default;
};

SubjectKey subject_key(const ActionProposal& p);

// True when the proposal's subject fields match its kind.
bool well_formed(const ActionProposal& p);

struct DispatchedAction {
    ActionProposal proposal;
    double step_db{0.0};  // offset actually dispatched after clamping
    double hold_s{0.0};   // HO: native-trigger hold installed with the handover
};

struct Decision {
    ActionProposal proposal;
    bool accepted{false};
    std::string guard;  // empty when accepted
};

struct DispatchBatch {
    Seconds tick_t{0.0};
    std::vector<DispatchedAction> e2_actions;
    std::vector<DispatchedAction> o1_actions;
    std::vector<Decision> decisions;

    bool empty() const { return e2_actions.empty() && o1_actions.empty(); }
};

}  // namespace ranctl
