#pragma once

#include <functional>
#include <memory>
#include <string>

#include "ranctl/audit.hpp"
#include "ranctl/common.hpp"
#include "ranctl/telemetry.hpp"

namespace ranctl {

enum class PromptKind { L2Blend, QoeHint, LoadHint, EnergyHint };

std::string_view to_string(PromptKind kind);

inline constexpr std::size_t kMaxContextBytes = 64 * 1024;

struct PromptRequest {
    PromptKind kind{PromptKind::L2Blend};
    Json context = Json::object();
    double deadline_ms{100.0};
    std::uint64_t seed{0};
};

// Payload shapes when valid:
//   L2Blend    {w_qoe, w_load, w_energy}
//   QoeHint    {preferred_neighbor}
//   LoadHint   {pair_order: [[a, b], ...], elephant: {"<cell>": ue}}
//   EnergyHint {sleep: bool} or {wake: bool}
struct PromptResponse {
    bool valid{false};
    bool timed_out{false};
    Json payload = Json::object();
    double latency_ms{0.0};
};

struct ProviderDeadlines {
    double tau_llm_ms{500.0};
    double tau_xapp_ms{100.0};

    void validate() const;
};

struct IntentWeights {
    double w_qoe{0.4};
    double w_load{0.4};
    double w_energy{0.4};

    bool operator==(const IntentWeights&) const = default;
};

class IntentProvider {
public:
    virtual ~IntentProvider() = default;
    virtual std::string name() const = 0;
    // Raw answer. Callers go through ask(), which applies the deadline and
    // payload checks.
    virtual PromptResponse respond(const PromptRequest& request) = 0;
};

// Deadline and schema gate shared by every caller. A late or malformed answer
// comes back with valid=false; callers fall back identically in both cases.
PromptResponse ask(IntentProvider& provider, const PromptRequest& request);

bool payload_matches(PromptKind kind, const Json& payload);

// Reference provider: a pure function of (context digest, seed).
class StubProvider : public IntentProvider {
public:
    explicit StubProvider(double latency_ms = 20.0) : latency_ms_(latency_ms) {}
    std::string name() const override { return "stub"; }
    PromptResponse respond(const PromptRequest& request) override;

private:
    double latency_ms_;
};

// Fault injection: never answers in time.
class TimeoutProvider : public IntentProvider {
public:
    std::string name() const override { return "timeout"; }
    PromptResponse respond(const PromptRequest& request) override;
};

// Fault injection: answers on time with a payload of the wrong shape.
class InvalidProvider : public IntentProvider {
public:
    std::string name() const override { return "invalid"; }
    PromptResponse respond(const PromptRequest& request) override;
};

// Test double.
class ScriptedProvider : public IntentProvider {
public:
    using Script = std::function<PromptResponse(const PromptRequest&)>;
    explicit ScriptedProvider(Script s) : script_(std::move(s)) {}
    std::string name() const override { return "scripted"; }
    PromptResponse respond(const PromptRequest& request) override { return script_(request); }

private:
    Script script_;
};

// Optional remote adapter. POSTs {kind, context, seed} as JSON to the URL in
// RANCTL_PROVIDER_URL and waits at most the request deadline (wall clock).
// An optional bearer token is read from RANCTL_PROVIDER_TOKEN.
class HttpProvider : public IntentProvider {
public:
    HttpProvider();
    std::string name() const override { return "http"; }
    PromptResponse respond(const PromptRequest& request) override;

private:
    std::string host_;
    std::string path_;
    std::string token_;
};

// "stub", "timeout", "invalid" or "http". Throws ParseError otherwise.
std::unique_ptr<IntentProvider> make_provider(const std::string& kind, double stub_latency_ms = 20.0);

// Phase-keyed fallback table, modulated by hotspot presence.
IntentWeights heuristic_blend(Phase phase, const KpiView& view, double hot_prb);

}  // namespace ranctl
