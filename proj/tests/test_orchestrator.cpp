#include <doctest.h>

#include <algorithm>
#include <random>

#include "ranctl/orchestrator.hpp"
#include "ranctl/ransim.hpp"
#include "support.hpp"

using namespace ranctl;
using testkit::cell_agg;
using testkit::ue_agg;

TEST_CASE("play selection") {
    const Intent intent;
    KpiView hot, quiet, mid;
    hot.cells[1] = cell_agg(0.9);
    quiet.cells[1] = cell_agg(0.1);
    mid.cells[1] = cell_agg(0.5);
    CHECK(select_play(Phase::Emergency, quiet, intent, 0.85) == PlayName::QoeFirst);
    CHECK(select_play(Phase::Normal, quiet, intent, 0.85) == PlayName::EnergyFirst);
    CHECK(select_play(Phase::Normal, mid, intent, 0.85) == PlayName::LoadFirst);
    CHECK(select_play(Phase::Recovery, hot, intent, 0.85) == PlayName::LoadFirst);
    CHECK(select_play(Phase::Recovery, mid, intent, 0.85) == PlayName::EnergyFirst);
    CHECK(select_play(Phase::Normal, KpiView{}, intent, 0.85) == PlayName::LoadFirst);
    Intent forced;
    forced.phase_overrides[Phase::Emergency] = PlayName::EnergyFirst;
    CHECK(select_play(Phase::Emergency, hot, forced, 0.85) == PlayName::EnergyFirst);
}

TEST_CASE("intent translation endpoints") {
    const Play& play = builtin_play(PlayName::LoadFirst);
    const auto lo = translate_intent({0.0, 0.0, 0.0}, play);
    const auto hi = translate_intent({1.0, 1.0, 1.0}, play);
    CHECK(lo.at(Agent::Load).at("cio_step_db") == 0.5);
    CHECK(hi.at(Agent::Load).at("cio_step_db") == 1.5);
    CHECK(lo.at(Agent::Qoe).at("dl_target_mbps") == 0.3);
    CHECK(hi.at(Agent::Qoe).at("dl_target_mbps") == 0.8);
    CHECK(translate_intent({0.4, 0.6, 0.0}, play).at(Agent::Load).at("cio_step_db") == doctest::Approx(1.1));
    CHECK_FALSE(lo.at(Agent::Load).contains("ul_p95_dbm_max"));
    CHECK(hi.at(Agent::Load).at("hot_prb") == doctest::Approx(0.75));
    CHECK(lo.at(Agent::Load).at("hot_prb") == 0.85);  // capped by the intent ceiling
    CHECK(translate_intent({0.0, 1.0, 0.0}, play).at(Agent::Load).at("ue_ban_s") == 15.0);
    CHECK(translate_intent({1.0, 0.0, 0.0}, play).at(Agent::Load).at("ue_ban_s") == 10.0);

    Intent bad;
    bad.prb_ceiling = 1.2;
    CHECK_THROWS_AS(bad.validate(), ParseError);
}

TEST_CASE("translated policies pass validation for any weights") {
    const auto reg = catalog_registry();
    const auto spec = GuardrailSpec::defaults();
    for (PlayName name : {PlayName::QoeFirst, PlayName::LoadFirst, PlayName::EnergyFirst})
        for (int a = 0; a <= 10; ++a)
            for (int b = 0; b <= 10; ++b)
                for (int c = 0; c <= 10; c += 5) {
                    const auto t = translate_intent({a / 10.0, b / 10.0, c / 10.0}, builtin_play(name));
                    for (const auto& [agent, fields] : t) {
                        auto full = default_values(agent);
                        for (const auto& [k, v] : fields) full[k] = v;
                        PolicyInstance p;
                        p.agent = agent;
                        p.values = full;
                        REQUIRE(reg.validate(p, spec).ok());
                    }
                }
}

TEST_CASE("merge resolves conflicts by priority") {
    SUBCASE("QoE beats Load on the same UE") {
        const auto q = ActionProposal::ho(Agent::Qoe, 5, 1, 2, "q", 10.0);
        const auto l = ActionProposal::ho(Agent::Load, 5, 1, 3, "l", 10.0);
        const auto m = merge({l, q});
        REQUIRE(m.accepted.size() == 1);
        CHECK(m.accepted[0].source == Agent::Qoe);
        REQUIRE(m.rejected.size() == 1);
        CHECK(m.rejected[0].proposal.source == Agent::Load);
        CHECK(m.rejected[0].guard == "deduped");
    }
    SUBCASE("energy sleep runs first and the HO into it is refused") {
        const auto topo = testkit::grid_topology();
        const auto s = ActionProposal::sleep(Agent::Energy, 7, "s", 10.0);
        const auto h = ActionProposal::ho(Agent::Qoe, 5, 8, 7, "h", 10.0);
        const auto m = merge({h, s});
        REQUIRE(m.accepted.size() == 2);
        CHECK(m.accepted[0].kind == ActionKind::Sleep);
        KpiView v;
        v.ues[5] = ue_agg(8, 0.1, -3.0);
        GuardState st;
        GuardInputs in;
        in.now = 10.0;
        in.view = &v;
        in.topology = &topo;
        const auto spec = GuardrailSpec::defaults();
        in.spec = &spec;
        const auto b = enforce_guards(m.accepted, st, in);
        REQUIRE(b.decisions.size() == 2);
        CHECK(b.decisions[0].accepted);
        CHECK(b.decisions[1].guard == "target-sleeping");
        CHECK(b.o1_actions.size() == 1);
        CHECK(b.e2_actions.empty());
    }
}

TEST_CASE("merge is independent of input order") {
    std::mt19937_64 rng(17);
    std::vector<ActionProposal> props;
    for (int i = 0; i < 24; ++i) {
        const Agent a = kAgents[rng() % 3];
        switch (rng() % 4) {
            case 0: props.push_back(ActionProposal::ho(a, 1 + rng() % 4, 1, 1 + rng() % 9, "", rng() % 3)); break;
            case 1: props.push_back(ActionProposal::offset(a, 1 + rng() % 3, 4, 1.0, "", rng() % 3)); break;
            case 2: props.push_back(ActionProposal::sleep(a, 1 + rng() % 9, "", rng() % 3)); break;
            default: props.push_back(ActionProposal::wake(a, 1 + rng() % 9, "", rng() % 3)); break;
        }
    }
    const auto ref = merge(props);
    for (int k = 0; k < 1000; ++k) {
        std::shuffle(props.begin(), props.end(), rng);
        const auto m = merge(props);
        REQUIRE(m.accepted == ref.accepted);
        REQUIRE(m.rejected.size() == ref.rejected.size());
        for (std::size_t i = 0; i < m.rejected.size(); ++i) REQUIRE(m.rejected[i].proposal == ref.rejected[i].proposal);
    }
    std::set<SubjectKey> keys;
    for (const auto& a : ref.accepted) CHECK(keys.insert(subject_key(a)).second);
    for (std::size_t i = 1; i < ref.accepted.size(); ++i)
        CHECK(priority_rank(ref.accepted[i - 1].source) <= priority_rank(ref.accepted[i].source));
}

namespace {

struct GuardFixture {
    CellTopology topo = testkit::grid_topology();
    GuardrailSpec spec = GuardrailSpec::defaults();
    GuardState st;
    KpiView view;

    DispatchBatch run(Seconds now, std::vector<ActionProposal> props) {
        GuardInputs in;
        in.now = now;
        in.view = &view;
        in.spec = &spec;
        in.topology = &topo;
        return enforce_guards(props, st, in);
    }
    static ActionProposal off(CellId a, CellId b, double step) {
        return ActionProposal::offset(Agent::Load, a, b, step, "", 0.0);
    }
};

}  // namespace

TEST_CASE("offset guards") {
    GuardFixture f;
    SUBCASE("a fourth step inside the window exhausts the budget") {
        const auto b = f.run(0, {f.off(1, 2, 1), f.off(1, 3, 1), f.off(1, 6, 1), f.off(1, 8, 1), f.off(2, 3, 1)});
        CHECK(b.decisions[3].guard == "budget");
        CHECK(b.decisions[4].accepted);
        CHECK(f.run(59, {f.off(1, 9, 1)}).decisions[0].guard == "budget");
        CHECK(f.run(60, {f.off(1, 9, 1)}).decisions[0].accepted);
    }
    SUBCASE("steps are clipped to the clamp") {
        const auto b = f.run(0, {f.off(1, 2, 7.0)});
        REQUIRE(b.e2_actions.size() == 1);
        CHECK(b.e2_actions[0].step_db == 6.0);
        CHECK(f.st.offset(1, 2) == 6.0);
        CHECK(f.run(10, {f.off(1, 2, 1.0)}).decisions[0].guard == "clamp");
        CHECK(f.run(20, {f.off(1, 2, -20.0)}).e2_actions[0].step_db == -12.0);
    }
    SUBCASE("cooldown per pair") {
        f.run(0, {f.off(1, 2, 1)});
        CHECK(f.run(4, {f.off(1, 2, 1)}).decisions[0].guard == "cooldown");
        CHECK(f.run(5, {f.off(1, 2, 1)}).decisions[0].accepted);
    }
}

TEST_CASE("handover guards") {
    GuardFixture f;
    f.view.ues[5] = ue_agg(1, 0.1, -3.0, 10.0);
    const auto ho = ActionProposal::ho(Agent::Qoe, 5, 1, 2, "", 0.0);

    auto b = f.run(100, {ho});
    REQUIRE(b.e2_actions.size() == 1);
    CHECK(b.e2_actions[0].hold_s == QoePolicy{}.ue_ban_s);
    CHECK(f.run(105, {ho}).decisions[0].guard == "ban");
    CHECK(f.run(110, {ho}).decisions[0].accepted);

    GuardFixture g;
    g.view.ues[5] = ue_agg(1, 0.1, -3.0, 2.0);
    CHECK(g.run(0, {ho}).decisions[0].guard == "dwell");
    g.view.ues[5].dwell_s = 3.0;
    g.view.ues[5].last_native_ho_t = 95.0;
    CHECK(g.run(100, {ho}).decisions[0].guard == "native-recent");
    CHECK(g.run(105, {ho}).decisions[0].accepted);
    CHECK(g.run(200, {ActionProposal::ho(Agent::Qoe, 9, 1, 2, "", 0.0)}).decisions[0].guard == "no-data");
    CHECK(g.run(300, {ActionProposal::ho(Agent::Qoe, 5, 2, 1, "", 0.0)}).decisions[0].guard == "no-op");
}

TEST_CASE("cell state guards") {
    GuardFixture f;
    auto b = f.run(0, {ActionProposal::sleep(Agent::Energy, 4, "", 0), ActionProposal::sleep(Agent::Energy, 5, "", 0),
                       ActionProposal::sleep(Agent::Energy, 6, "", 0)});
    CHECK(b.decisions[0].accepted);
    CHECK(b.decisions[1].accepted);
    CHECK(b.decisions[2].guard == "min-active");
    CHECK(f.run(1, {ActionProposal::sleep(Agent::Energy, 4, "", 1)}).decisions[0].guard == "no-op");
    CHECK(f.run(2, {ActionProposal::wake(Agent::Energy, 6, "", 2)}).decisions[0].guard == "no-op");
    CHECK(f.run(3, {ActionProposal::wake(Agent::Energy, 4, "", 3)}).o1_actions.size() == 1);
}

TEST_CASE("orchestrator keeps ticking through a frozen store") {
    Simulator sim(ScenarioConfig{});
    Telemetry tel;
    PolicyStore store(catalog_registry(), GuardrailSpec::defaults());
    OrchestratorConfig cfg;
    cfg.publication_freeze = std::pair<Seconds, Seconds>{0.0, 60.0};
    CellTopology topo = testkit::grid_topology();
    StubProvider stub;
    Orchestrator orch(cfg, store, tel, topo, nullptr, &stub, 1);
    const auto v0 = store.version(Agent::Load);
    for (int s = 0; s < 90; ++s) {
        for (const auto& x : sim.advance_second()) tel.ingest(x);
        orch.tick(sim.now(), sim.phase_at(sim.now()));
        if (sim.now() < 60.0) REQUIRE(store.version(Agent::Load) == v0);
    }
    CHECK(orch.stats().ticks == 90);
    for (Agent a : kAgents) CHECK(orch.stats().xapp_ticks.at(a) == 90);
    CHECK(store.version(Agent::Load) > v0);
}
