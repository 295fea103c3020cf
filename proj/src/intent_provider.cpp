#include "ranctl/intent_provider.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace ranctl {

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::L2Blend: return "L2_blend";
        case PromptKind::QoeHint: return "qoe_hint";
        case PromptKind::LoadHint: return "load_hint";
        case PromptKind::EnergyHint: return "energy_hint";
    }
    return "?";
}

void ProviderDeadlines::validate() const {
    if (!(tau_llm_ms > 0.0) || !(tau_xapp_ms > 0.0)) throw ParseError("provider: deadlines must be positive");
    if (tau_xapp_ms > tau_llm_ms) throw ParseError("provider: tau_xapp_ms must not exceed tau_llm_ms");
}

bool payload_matches(PromptKind kind, const Json& p) {
    if (!p.is_object()) return false;
    auto unit = [&](const char* k) {
        return p.contains(k) && p[k].is_number() && p[k].get<double>() >= 0.0 && p[k].get<double>() <= 1.0;
    };
    switch (kind) {
        case PromptKind::L2Blend: return unit("w_qoe") && unit("w_load") && unit("w_energy");
        case PromptKind::QoeHint:
            return p.contains("preferred_neighbor") && p["preferred_neighbor"].is_number_integer();
        case PromptKind::LoadHint: {
            if (!p.contains("pair_order") || !p["pair_order"].is_array()) return false;
            for (const auto& pr : p["pair_order"])
                if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_integer() || !pr[1].is_number_integer())
                    return false;
            if (p.contains("elephant")) {
                if (!p["elephant"].is_object()) return false;
                for (const auto& [k, v] : p["elephant"].items())
                    if (!v.is_number_integer()) return false;
            }
            return true;
        }
        case PromptKind::EnergyHint:
            return (p.contains("sleep") && p["sleep"].is_boolean()) || (p.contains("wake") && p["wake"].is_boolean());
    }
    return false;
}

PromptResponse ask(IntentProvider& provider, const PromptRequest& request) {
    PromptResponse out;
    if (!(request.deadline_ms > 0.0) || request.context.dump().size() > kMaxContextBytes) return out;
    PromptResponse r = provider.respond(request);
    if (r.timed_out || r.latency_ms > request.deadline_ms) {
        out.timed_out = true;
        out.latency_ms = request.deadline_ms;
        return out;
    }
    out.latency_ms = r.latency_ms;
    if (!r.valid || !payload_matches(request.kind, r.payload)) return out;
    out.valid = true;
    out.payload = std::move(r.payload);
    return out;
}

namespace {

std::uint64_t digest_of(const PromptRequest& req) {
    return fnv1a64(req.context.dump(), 0xcbf29ce484222325ULL ^ (req.seed * 0x9e3779b97f4a7c15ULL));
}

// Uniform in [0,1) from 16 bits of the digest starting at `shift`.
double frac(std::uint64_t digest, int shift) { return static_cast<double>((digest >> shift) & 0xffff) / 65536.0; }

Json stub_blend(const Json& ctx, std::uint64_t h) {
    auto phase = phase_from_string(ctx.value("phase", std::string()));
    if (!phase) return Json::object();
    const bool hotspot = ctx.value("hotspot", false);
    const bool quiet = ctx.value("quiet", false);
    IntentWeights w;
    switch (*phase) {
        case Phase::Normal: w = {0.4, 0.4, 0.4}; break;
        case Phase::Emergency: w = {0.8, 0.8, 0.0}; break;
        case Phase::Recovery: w = {0.5, 0.5, 0.6}; break;
    }
    if (!hotspot) {
        w.w_qoe -= 0.2;
        w.w_load -= 0.2;
        w.w_energy += 0.2;
    }
    if (quiet) w.w_energy = 1.0;
    auto jitter = [&](double v, int shift) { return std::clamp(v + 0.1 * (frac(h, shift) - 0.5), 0.0, 1.0); };
    Json p;
    p["w_qoe"] = jitter(w.w_qoe, 0);
    p["w_load"] = jitter(w.w_load, 16);
    p["w_energy"] = jitter(w.w_energy, 32);
    return p;
}

Json stub_qoe(const Json& ctx, std::uint64_t h) {
    struct Cand {
        int cell;
        double sinr;
        double free;
    };
    std::vector<Cand> c;
    for (const auto& x : ctx.value("candidates", Json::array()))
        c.push_back({x.value("cell", -1), x.value("sinr_db", 0.0), x.value("free_prb", 0.0)});
    Json p;
    if (c.empty()) {
        p["preferred_neighbor"] = -1;
        return p;
    }
    std::sort(c.begin(), c.end(), [](const Cand& a, const Cand& b) {
        if (a.sinr != b.sinr) return a.sinr > b.sinr;
        if (a.free != b.free) return a.free > b.free;
        return a.cell < b.cell;
    });
    // Near-ties on SINR are broken by the digest.
    std::size_t k = 1;
    while (k < c.size() && c[0].sinr - c[k].sinr < 0.5) ++k;
    p["preferred_neighbor"] = c[h % k].cell;
    return p;
}

Json stub_load(const Json& ctx, std::uint64_t h) {
    Json order = Json::array();
    std::vector<double> gaps;
    for (const auto& pr : ctx.value("pairs", Json::array())) {
        order.push_back(Json::array({pr.at(0), pr.at(1)}));
        gaps.push_back(pr.size() > 2 ? pr[2].get<double>() : 0.0);
    }
    if (order.size() >= 2 && std::abs(gaps[0] - gaps[1]) < 0.02 && (h & 1)) std::swap(order[0], order[1]);
    Json p;
    p["pair_order"] = order;
    Json eleph = Json::object();
    const Json elephants = ctx.value("elephants", Json::object());
    for (const auto& [cell, list] : elephants.items())
        if (list.is_array() && !list.empty()) eleph[cell] = list[0];
    p["elephant"] = eleph;
    return p;
}

Json stub_energy(const Json& ctx) {
    Json p;
    if (ctx.value("state", std::string()) == "sleeping")
        p["wake"] = ctx.value("wake_cond", false);
    else
        p["sleep"] = ctx.value("idle", false);
    return p;
}

}  // namespace

PromptResponse StubProvider::respond(const PromptRequest& req) {
    PromptResponse r;
    r.latency_ms = latency_ms_;
    const std::uint64_t h = digest_of(req);
    switch (req.kind) {
        case PromptKind::L2Blend: r.payload = stub_blend(req.context, h); break;
        case PromptKind::QoeHint: r.payload = stub_qoe(req.context, h); break;
        case PromptKind::LoadHint: r.payload = stub_load(req.context, h); break;
        case PromptKind::EnergyHint: r.payload = stub_energy(req.context); break;
    }
    r.valid = payload_matches(req.kind, r.payload);
    return r;
}

PromptResponse TimeoutProvider::respond(const PromptRequest& req) {
    PromptResponse r;
    r.timed_out = true;
    r.latency_ms = req.deadline_ms + 1.0;
    return r;
}

PromptResponse InvalidProvider::respond(const PromptRequest&) {
    PromptResponse r;
    r.valid = true;
    r.latency_ms = 1.0;
    r.payload = Json::object({{"garbage", true}});
    return r;
}

HttpProvider::HttpProvider() {
    const char* url = std::getenv("RANCTL_PROVIDER_URL");
    if (!url || !*url) throw ParseError("provider: RANCTL_PROVIDER_URL is not set");
    std::string u(url);
    const auto scheme = u.find("://");
    const auto path_at = u.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    host_ = path_at == std::string::npos ? u : u.substr(0, path_at);
    path_ = path_at == std::string::npos ? "/" : u.substr(path_at);
    if (const char* tok = std::getenv("RANCTL_PROVIDER_TOKEN")) token_ = tok;
}

PromptResponse HttpProvider::respond(const PromptRequest& req) {
    Json body;
    body["kind"] = std::string(to_string(req.kind));
    body["context"] = req.context;
    body["seed"] = req.seed;
    auto promise = std::make_shared<std::promise<PromptResponse>>();
    auto fut = promise->get_future();
    const auto start = std::chrono::steady_clock::now();
    // Detached so a late answer never holds up the caller.
    std::thread([promise, host = host_, path = path_, token = token_, payload = body.dump(), start]() {
        PromptResponse r;
        try {
            httplib::Client cli(host);
            httplib::Headers headers;
            if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
            auto res = cli.Post(path, headers, payload, "application/json");
            if (res && res->status == 200) {
                r.payload = Json::parse(res->body);
                r.valid = true;
            }
        } catch (...) {
            r.valid = false;
        }
        r.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        promise->set_value(std::move(r));
    }).detach();
    if (fut.wait_for(std::chrono::duration<double, std::milli>(req.deadline_ms)) != std::future_status::ready) {
        PromptResponse late;
        late.timed_out = true;
        late.latency_ms = req.deadline_ms;
        return late;
    }
    return fut.get();
}

std::unique_ptr<IntentProvider> make_provider(const std::string& kind, double stub_latency_ms) {
    if (kind == "stub") return std::make_unique<StubProvider>(stub_latency_ms);
    if (kind == "timeout") return std::make_unique<TimeoutProvider>();
    if (kind == "invalid") return std::make_unique<InvalidProvider>();
    if (kind == "http") return std::make_unique<HttpProvider>();
    throw ParseError(fmt::format("provider: unknown kind '{}'", kind));
}

IntentWeights heuristic_blend(Phase phase, const KpiView& view, double hot_prb) {
    IntentWeights w;
    switch (phase) {
        case Phase::Normal: w = {0.4, 0.4, 0.4}; break;
        case Phase::Emergency: w = {0.8, 0.8, 0.0}; break;
        case Phase::Recovery: w = {0.5, 0.5, 0.6}; break;
    }
    bool hotspot = false;
    bool quiet = false;
    for (const auto& [id, c] : view.cells) {
        if (!c.has_data) continue;
        if (c.prb_dl_mean > hot_prb) hotspot = true;
        quiet = true;
    }
    for (const auto& [id, c] : view.cells)
        if (c.has_data && c.prb_dl_mean >= 0.3) quiet = false;
    if (!hotspot) {
        w.w_qoe -= 0.2;
        w.w_load -= 0.2;
        w.w_energy += 0.2;
    }
    if (quiet) w.w_energy = 1.0;
    w.w_qoe = std::clamp(w.w_qoe, 0.0, 1.0);
    w.w_load = std::clamp(w.w_load, 0.0, 1.0);
    w.w_energy = std::clamp(w.w_energy, 0.0, 1.0);
    return w;
}

}  // namespace ranctl
