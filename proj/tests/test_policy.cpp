#include <doctest.h>

#include <random>

#include "ranctl/orchestrator.hpp"
#include "ranctl/policy.hpp"

using namespace ranctl;

namespace {

PolicyInstance instance(Agent a, FieldValues v, Seconds t = 0.0, PolicySource src = PolicySource::IntentL2) {
    PolicyInstance p;
    p.agent = a;
    p.values = std::move(v);
    p.issued_at = t;
    p.source = src;
    return p;
}

}  // namespace

TEST_CASE("schema registration") {
    SchemaRegistry r;
    const auto h = r.register_schema(Agent::Qoe, catalog_schema(Agent::Qoe));
    CHECK(h.field_count == 5);
    CHECK(h.agent == Agent::Qoe);
    CHECK_THROWS_AS(r.register_schema(Agent::Qoe, catalog_schema(Agent::Qoe)), Error);
    CHECK_THROWS_AS(r.register_schema(Agent::Load, {}), Error);
    CHECK(catalog_schema(Agent::Load).size() == 6);
    CHECK(catalog_schema(Agent::Energy).size() == 7);
}

TEST_CASE("validation against guardrail ranges") {
    const auto reg = catalog_registry();
    const auto spec = GuardrailSpec::defaults();
    auto v = default_values(Agent::Load);
    v["cio_step_db"] = 1.0;
    CHECK(reg.validate(instance(Agent::Load, v), spec).ok());

    v["cio_step_db"] = 2.0;
    const auto res = reg.validate(instance(Agent::Load, v), spec);
    REQUIRE(res.violations.size() == 1);
    CHECK(res.violations[0].field == "cio_step_db");
    CHECK(res.violations[0].value == 2.0);
    CHECK(res.violations[0].bound == "max 1.5");

    SUBCASE("cross-field") {
        auto w = default_values(Agent::Load);
        w["cool_prb"] = 0.6;
        w["hot_prb"] = 0.7;
        CHECK(reg.validate(instance(Agent::Load, w), spec).ok());
        w["hot_prb"] = 0.6;
        w["cool_prb"] = 0.6;
        CHECK_FALSE(reg.validate(instance(Agent::Load, w), spec).ok());
    }
    SUBCASE("unknown and missing") {
        auto w = default_values(Agent::Qoe);
        w["bogus"] = 1.0;
        w.erase("ue_ban_s");
        const auto r2 = reg.validate(instance(Agent::Qoe, w), spec);
        REQUIRE(r2.violations.size() == 2);
        CHECK(r2.violations[0].bound == "unknown-field");
        CHECK(r2.violations[1].bound == "missing-field");
    }
    SUBCASE("non-finite and integral") {
        auto w = default_values(Agent::Energy);
        w["idle_prb_max"] = std::nan("");
        w["wake_ue_min"] = 1.5;
        const auto r3 = reg.validate(instance(Agent::Energy, w), spec);
        CHECK(r3.violations.size() == 2);
    }
}

TEST_CASE("clamp and rate limit") {
    auto spec = GuardrailSpec::defaults();
    spec.fields["cio_step_db"].max_step_per_edit = 0.2;
    const FieldValues prev{{"cio_step_db", 0.5}, {"headroom_min", 0.15}};

    auto out = clamp_rate_limit({{"cio_step_db", 1.5}}, prev, spec, {}, 0.0);
    CHECK(out.at("cio_step_db") == doctest::Approx(0.7).epsilon(1e-12));

    // Clamp to 0.30 first, then cap the step at 0.025 from 0.15.
    out = clamp_rate_limit({{"headroom_min", 0.9}}, prev, spec, {}, 0.0);
    CHECK(out.at("headroom_min") == doctest::Approx(0.175).epsilon(1e-12));

    SUBCASE("cooldown holds the field") {
        const EditClock clock{{"cio_step_db", 100.0}};
        CHECK(clamp_rate_limit({{"cio_step_db", 1.5}}, prev, spec, clock, 150.0).at("cio_step_db") == 0.5);
        CHECK(clamp_rate_limit({{"cio_step_db", 1.5}}, prev, spec, clock, 220.0).at("cio_step_db") ==
              doctest::Approx(0.7));
    }
    SUBCASE("small moves pass unchanged") {
        CHECK(clamp_rate_limit({{"cio_step_db", 0.6}}, prev, spec, {}, 0.0).at("cio_step_db") == 0.6);
    }
    SUBCASE("absent previous passes clamped") {
        CHECK(clamp_rate_limit({{"cio_step_db", 9.0}}, {}, spec, {}, 0.0).at("cio_step_db") == 1.5);
    }
    SUBCASE("integral fields round") {
        const FieldValues p2{{"mcs_min", 3.0}};
        CHECK(clamp_rate_limit({{"mcs_min", 3.6}}, p2, spec, {}, 0.0).at("mcs_min") == 4.0);
    }
}

TEST_CASE("policy store versions and refusals") {
    AuditLog audit;
    PolicyStore store(catalog_registry(), GuardrailSpec::defaults(), &audit);
    auto r1 = store.publish(instance(Agent::Load, default_values(Agent::Load)));
    CHECK(r1.published);
    CHECK(r1.version == 1);
    auto v = default_values(Agent::Load);
    v["cio_step_db"] = 2.0;
    const std::size_t before = audit.size();
    auto r2 = store.publish(instance(Agent::Load, v, 1.0));
    CHECK_FALSE(r2.published);
    CHECK(store.version(Agent::Load) == 1);
    REQUIRE(audit.size() == before + 1);
    CHECK(audit.records().back().kind == AuditKind::Refuse);

    v["cio_step_db"] = 1.2;
    auto r3 = store.publish(instance(Agent::Load, v, 2.0));
    CHECK(r3.version == 2);
    REQUIRE(r3.changes.size() == 1);
    CHECK(r3.changes[0].old_value == 1.0);
    CHECK(r3.changes[0].new_value == 1.2);
}

TEST_CASE("snapshots are immutable") {
    PolicyStore store(catalog_registry(), GuardrailSpec::defaults());
    store.publish(instance(Agent::Qoe, default_values(Agent::Qoe)));
    const auto held = store.latest(Agent::Qoe);
    auto v = default_values(Agent::Qoe);
    v["dl_target_mbps"] = 0.7;
    store.publish(instance(Agent::Qoe, v, 1.0));
    CHECK(held->values.at("dl_target_mbps") == 0.5);
    CHECK(store.latest(Agent::Qoe)->values.at("dl_target_mbps") == 0.7);
}

TEST_CASE("ttl publications revert exactly") {
    AuditLog audit;
    PolicyStore store(catalog_registry(), GuardrailSpec::defaults(), &audit);
    store.publish(instance(Agent::Qoe, default_values(Agent::Qoe)));
    auto v = default_values(Agent::Qoe);
    v["headroom_min"] = 0.125;
    auto inst = instance(Agent::Qoe, v, 10.0, PolicySource::Apt);
    inst.ttl_s = 60.0;
    store.publish(inst);
    CHECK(store.expire(69.0).empty());
    const auto reverts = store.expire(70.0);
    REQUIRE(reverts.size() == 1);
    CHECK(store.latest(Agent::Qoe)->values == default_values(Agent::Qoe));
    CHECK(store.latest(Agent::Qoe)->version == 3);
    CHECK(audit.records().back().kind == AuditKind::TtlRevert);
    CHECK_FALSE(store.has_pending_revert());
}

TEST_CASE("fuzzed publications never expose an out-of-range field") {
    std::mt19937_64 rng(7);
    PolicyStore store(catalog_registry(), GuardrailSpec::defaults());
    const auto spec = GuardrailSpec::defaults();
    for (Agent a : kAgents) store.publish(instance(a, default_values(a)));
    for (int i = 0; i < 10000; ++i) {
        const Agent a = kAgents[rng() % 3];
        auto v = store.latest(a)->values;
        for (auto& [name, x] : v) {
            if (rng() % 2) continue;
            const auto& g = spec.guard(name);
            std::uniform_real_distribution<double> d(g.min - (g.max - g.min), g.max + (g.max - g.min));
            x = d(rng);
        }
        store.publish(instance(a, v, i));
        for (Agent b : kAgents)
            for (const auto& [name, x] : store.latest(b)->values) {
                const auto& g = spec.guard(name);
                REQUIRE(x >= g.min);
                REQUIRE(x <= g.max);
            }
    }
}

TEST_CASE("guardrail spec checks") {
    auto s = GuardrailSpec::defaults();
    CHECK_NOTHROW(s.check());
    s.offset_clamp_min_db = -5.0;
    CHECK_THROWS_AS(s.check(), Error);
    s = GuardrailSpec::defaults();
    s.budget_offset_steps = 0;
    CHECK_THROWS_AS(s.check(), Error);
    for (const auto& [name, g] : GuardrailSpec::defaults().fields) CHECK(g.min <= g.max);
}
