#pragma once

#include <filesystem>
#include <string>

#include "ranctl/apt.hpp"
#include "ranctl/audit.hpp"
#include "ranctl/orchestrator.hpp"
#include "ranctl/policy.hpp"
#include "ranctl/ransim.hpp"

namespace ranctl {

enum class Controller { Baseline, Agentic };

std::string_view to_string(Controller c);
Controller controller_from_string(std::string_view name);

struct ProviderConfig {
    std::string kind{"stub"};  // stub | timeout | invalid | http
    double stub_latency_ms{20.0};
};

struct RunConfig {
    ScenarioConfig scenario;
    Controller controller{Controller::Agentic};
    ProviderConfig provider;
    OrchestratorConfig orchestrator;
    GuardrailSpec guardrails = GuardrailSpec::defaults();
    AptConfig apt;
    TelemetryConfig telemetry;
    Seconds outcome_lag_s{10.0};
    double outcome_dead_band{0.05};

    // Throws ParseError naming the offending key.
    void validate() const;
};

// Every key is optional; absent keys keep their defaults. Unknown keys and
// wrong types are ParseErrors carrying the key path ("scenario.surge.radius_m").
RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& cfg);

// Parse errors carry file:line:column.
RunConfig load_config(const std::filesystem::path& file);
void save_config(const RunConfig& cfg, const std::filesystem::path& file);

// Stable digest of everything that shapes the simulated RAN except the seed.
std::uint64_t scenario_digest(const RunConfig& cfg);

}  // namespace ranctl
