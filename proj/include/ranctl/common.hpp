#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ranctl {

using Seconds = double;
using CellId = int;
using UeId = int;
using SiteId = int;

// The three near-RT agents. Order doubles as the merge priority
// (Energy first, Load last).
enum class Agent { Energy = 0, Qoe = 1, Load = 2 };

inline constexpr std::array<Agent, 3> kAgents{Agent::Qoe, Agent::Load, Agent::Energy};

std::string_view to_string(Agent agent);
std::optional<Agent> agent_from_string(std::string_view name);

enum class Phase { Normal, Emergency, Recovery };

std::string_view to_string(Phase phase);
std::optional<Phase> phase_from_string(std::string_view name);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration or input-file problems. Carries a location when known.
class ParseError : public Error {
public:
    using Error::Error;
};

// Audit or artifact writes failed; the run cannot continue.
class StorageError : public Error {
public:
    using Error::Error;
};

// A request refused by a guard (seed collision, mismatched runs, bad replay seed).
class GuardError : public Error {
public:
    using Error::Error;
};

// Stable 64-bit FNV-1a. Used where a digest must not change across builds.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace ranctl
