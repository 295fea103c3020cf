#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "ranctl/xapp_energy.hpp"
#include "ranctl/xapp_load.hpp"
#include "ranctl/xapp_qoe.hpp"
#include "support.hpp"

using namespace ranctl;
using testkit::cell_agg;
using testkit::ue_agg;

namespace {

NeighborMeasurement meas(CellId c, double sinr) { return {c, -90.0, -10.0, sinr}; }

ScriptedProvider answering(Json payload) {
    return ScriptedProvider([payload](const PromptRequest&) {
        PromptResponse r;
        r.valid = true;
        r.latency_ms = 1.0;
        r.payload = payload;
        return r;
    });
}

// Starved UE 5 on cell 1 with two candidates next door.
KpiView qoe_view() {
    KpiView v;
    v.window_s = 5.0;
    v.cells[1] = cell_agg(0.95);
    v.cells[2] = cell_agg(0.30);
    v.cells[3] = cell_agg(0.90);
    v.cells[6] = cell_agg(0.50);
    auto u = ue_agg(1, 0.19, -2.0);
    u.neighbors = {meas(1, -2.0), meas(2, 4.0), meas(3, 9.0), meas(6, 1.0)};
    v.ues[5] = u;
    return v;
}

}  // namespace

TEST_CASE("qoe proposes a handover for a starved UE") {
    const auto topo = testkit::grid_topology();
    XappContext ctx;
    ctx.now = 42.0;
    ctx.topology = &topo;
    const QoePolicy pol;
    const auto v = qoe_view();

    const auto cands = qoe_candidates(v.ues.at(5), v, pol, &topo);
    REQUIRE(cands.size() == 2);  // cell 3 lacks headroom
    CHECK(qoe_base_choice(cands) == 2);

    const auto out = qoe_tick(v, pol, ctx);
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == ActionKind::Ho);
    CHECK(out[0].ue == 5);
    CHECK(out[0].cell == 1);
    CHECK(out[0].target == 2);
    CHECK(out[0].t_proposed == 42.0);

    SUBCASE("a hint naming a cell without headroom is ignored") {
        auto p = answering({{"preferred_neighbor", 3}});
        ctx.provider = &p;
        CHECK(qoe_tick(v, pol, ctx)[0].target == 2);
    }
    SUBCASE("a valid hint wins") {
        auto p = answering({{"preferred_neighbor", 6}});
        ctx.provider = &p;
        CHECK(qoe_tick(v, pol, ctx)[0].target == 6);
    }
    SUBCASE("timeouts fall back to the base choice") {
        TimeoutProvider p;
        ctx.provider = &p;
        CHECK(qoe_tick(v, pol, ctx) == out);
        InvalidProvider q;
        ctx.provider = &q;
        CHECK(qoe_tick(v, pol, ctx) == out);
    }
    SUBCASE("dwell gate") {
        auto w = v;
        w.ues[5].dwell_s = 1.0;
        CHECK(qoe_tick(w, pol, ctx).empty());
    }
    SUBCASE("a UE that gets what it asks for is left alone") {
        auto w = v;
        w.ues[5].sched_dl_mean = 0.19;
        w.ues[5].sinr_median = 3.0;
        CHECK_FALSE(qoe_shortfall(w.ues[5], pol));
        CHECK(qoe_tick(w, pol, ctx).empty());
    }
    SUBCASE("no gain, no move") {
        auto w = v;
        w.ues[5].prb_share_mean = 0.9;
        w.ues[5].sinr_median = 5.0;
        w.ues[5].sched_dl_mean = 5.0;
        CHECK(qoe_tick(w, pol, ctx).empty());
    }
}

TEST_CASE("expected gain") {
    auto u = ue_agg(1, 0.2, 0.0);
    u.prb_share_mean = 0.5;
    CHECK(qoe_expected_gain(u, {2, 0.0, 0.5}) == doctest::Approx(1.0));
    CHECK(qoe_expected_gain(u, {2, 0.0, 1.0}) == doctest::Approx(2.0));
    u.prb_share_mean = 0.0;
    CHECK(std::isinf(qoe_expected_gain(u, {2, 0.0, 0.5})));
}

namespace {

KpiView load_view() {
    KpiView v;
    v.window_s = 30.0;
    v.cells[1] = cell_agg(0.9);
    v.cells[2] = cell_agg(0.4);
    v.cells[2].mcs_p50 = 10.0;
    v.cells[2].ul_p95_dbm = -100.0;
    v.cells[4] = cell_agg(0.2);  // not adjacent to 1
    auto big = ue_agg(1, 4.0, 3.0);
    big.neighbors = {meas(2, -2.0)};
    auto small = ue_agg(1, 1.0, 6.0);
    small.neighbors = {meas(2, 5.0)};
    v.ues[7] = big;
    v.ues[8] = small;
    return v;
}

LoadPolicy tuned_load() {
    LoadPolicy p;
    p.mcs_min = 5.0;
    p.ul_p95_dbm_max = -95.0;
    return p;
}

}  // namespace

TEST_CASE("load pairs and actions") {
    const auto topo = testkit::grid_topology();
    const auto v = load_view();
    const auto pol = tuned_load();
    const auto pairs = find_pairs(v, pol, topo);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].hot == 1);
    CHECK(pairs[0].cool == 2);
    CHECK(pairs[0].gap == doctest::Approx(0.5));

    XappContext ctx;
    ctx.topology = &topo;
    auto out = load_tick(v, pol, ctx);
    REQUIRE(out.size() == 2);
    CHECK(out[0].kind == ActionKind::OffsetStep);
    CHECK(out[0].cell == 1);
    CHECK(out[0].target == 2);
    CHECK(out[0].step_db == pol.cio_step_db);
    CHECK(out[1].kind == ActionKind::Ho);
    CHECK(out[1].ue == 7);
    CHECK(out[1].target == 2);

    SUBCASE("unhealthy target gets the offset only") {
        auto w = v;
        w.cells[2].ul_p95_dbm = -90.0;
        const auto o = load_tick(w, pol, ctx);
        REQUIRE(o.size() == 1);
        CHECK(o[0].kind == ActionKind::OffsetStep);
    }
    SUBCASE("no UE at 0 dB or better") {
        auto w = v;
        w.ues[7].sinr_median = -1.0;
        w.ues[8].sinr_median = -0.5;
        const auto o = load_tick(w, pol, ctx);
        REQUIRE(o.size() == 1);
        CHECK(o[0].kind == ActionKind::OffsetStep);
    }
    SUBCASE("hinted elephant replaces the fallback") {
        auto p = answering({{"pair_order", Json::array({Json::array({1, 2})})}, {"elephant", {{"1", 8}}}});
        ctx.provider = &p;
        CHECK(load_tick(v, pol, ctx)[1].ue == 8);
    }
    SUBCASE("reciprocal step") {
        LoadOptions opt;
        opt.reciprocal = true;
        const auto o = load_tick(v, pol, ctx, opt);
        REQUIRE(o.size() == 3);
        CHECK(o[1].cell == 2);
        CHECK(o[1].step_db == -pol.cio_step_db);
    }
}

TEST_CASE("saturated pairs do not use a slot") {
    const auto topo = testkit::grid_topology();
    auto v = load_view();
    v.cells[3] = cell_agg(0.45);
    v.ues.clear();
    const auto pol = tuned_load();
    OffsetTable offsets{{{1, 2}, 6.0}};
    XappContext ctx;
    ctx.topology = &topo;
    ctx.offsets = &offsets;
    const auto out = load_tick(v, pol, ctx);
    REQUIRE(out.size() == 1);
    CHECK(out[0].cell == 1);
    CHECK(out[0].target == 3);

    SUBCASE("with an elephant the saturated pair still moves it") {
        auto w = load_view();
        w.cells[3] = cell_agg(0.45);
        const auto o = load_tick(w, pol, ctx);
        REQUIRE(o.size() == 1);
        CHECK(o[0].kind == ActionKind::Ho);
        CHECK(o[0].target == 2);
    }
    SUBCASE("unwind steps idle pairs back") {
        OffsetTable off2{{{1, 2}, 6.0}, {{4, 5}, 0.6}, {{5, 4}, -3.0}};
        ctx.offsets = &off2;
        LoadOptions opt;
        opt.unwind = true;
        const auto o = load_tick(v, pol, ctx, opt);
        REQUIRE(o.size() == 3);
        CHECK(o[1].cell == 4);
        CHECK(o[1].step_db == doctest::Approx(-0.6));
        CHECK(o[2].step_db == doctest::Approx(1.0));
    }
}

TEST_CASE("stable merge order examples") {
    const std::vector<HotCoolPair> p{{1, 2, 0.5}, {1, 3, 0.4}, {6, 4, 0.3}};
    CHECK(stable_merge_order(p, {}) == p);
    CHECK(stable_merge_order(p, {{6, 4}}) == std::vector<HotCoolPair>{p[2], p[0], p[1]});
    CHECK(stable_merge_order(p, {{1, 3}, {6, 4}}) == std::vector<HotCoolPair>{p[1], p[2], p[0]});
    CHECK(stable_merge_order(p, {{9, 9}}) == p);
    CHECK(stable_merge_order(p, {{1, 3}, {1, 3}}) == p);
}

TEST_CASE("stable merge order against an exhaustive oracle") {
    // Every hint of length <= 3 over the known pairs plus one unknown pair.
    std::vector<HotCoolPair> universe{{1, 2, 0.5}, {1, 3, 0.4}, {6, 4, 0.4}, {9, 7, 0.1}};
    const std::pair<CellId, CellId> unknown{5, 5};
    int checked = 0;
    for (std::size_t n = 0; n <= universe.size(); ++n) {
        const std::vector<HotCoolPair> pairs(universe.begin(), universe.begin() + static_cast<long>(n));
        std::vector<std::pair<CellId, CellId>> alphabet;
        for (const auto& x : pairs) alphabet.emplace_back(x.hot, x.cool);
        alphabet.push_back(unknown);
        std::function<void(PairOrder&)> rec = [&](PairOrder& hint) {
            // Oracle: rank by hint position, then by original position.
            bool valid = true;
            for (std::size_t i = 0; i < hint.size(); ++i) {
                if (hint[i] == unknown) valid = false;
                for (std::size_t j = 0; j < i; ++j) valid = valid && hint[i] != hint[j];
            }
            std::vector<HotCoolPair> expect = pairs;
            if (valid) {
                auto rank = [&](const HotCoolPair& x) {
                    for (std::size_t i = 0; i < hint.size(); ++i)
                        if (hint[i] == std::pair{x.hot, x.cool}) return static_cast<int>(i);
                    return static_cast<int>(hint.size());
                };
                std::stable_sort(expect.begin(), expect.end(),
                                 [&](const HotCoolPair& a, const HotCoolPair& b) { return rank(a) < rank(b); });
            }
            REQUIRE(stable_merge_order(pairs, hint) == expect);
            ++checked;
            if (hint.size() == 3) return;
            for (const auto& a : alphabet) {
                hint.push_back(a);
                rec(hint);
                hint.pop_back();
            }
        };
        PairOrder h;
        rec(h);
    }
    CHECK(checked > 100);
}

TEST_CASE("idle assessment") {
    EnergyPolicy pol;
    TelemetryConfig tc;
    Telemetry tel(tc);
    // Cell 4 idle but only observed for the last 120 s of a 300 s window.
    for (int t = 181; t <= 300; ++t) {
        KpiSample s;
        s.t = t;
        s.cell_id = 4;
        tel.ingest(s);
    }
    auto a = assess_idle(4, tel.view_window(300, 300), pol);
    CHECK_FALSE(a.observed);
    CHECK(a.prb_ok);
    CHECK_FALSE(a.idle);
    CHECK_FALSE(assess_idle(4, tel.view_window(300, 120), pol).idle);  // view shorter than the policy window
    pol.idle_window_min = 2.0;
    CHECK(assess_idle(4, tel.view_window(300, 120), pol).idle);
    CHECK_FALSE(assess_idle(77, tel.view_window(300, 120), pol).observed);
}

TEST_CASE("idle assessment matches direct recomputation") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 300; ++k) {
        EnergyPolicy pol;
        pol.idle_window_min = 1.0 + rng() % 3;
        Telemetry tel;
        std::vector<KpiSample> raw;
        std::vector<HoEvent> arrivals;
        const int start = 1 + static_cast<int>(rng() % 100);
        const int end = 200;
        const bool busy = rng() % 2;
        for (int t = start; t <= end; ++t) {
            KpiSample s;
            s.t = t;
            s.cell_id = 4;
            s.prb_dl = (busy && rng() % 40 == 0) ? 0.2 : 0.01 * static_cast<double>(rng() % 4);
            s.sched_dl_mbps = (rng() % 50 == 0) ? 0.5 : 0.05;
            s.attached_ue_count = (rng() % 60 == 0) ? 1 : 0;
            tel.ingest(s);
            raw.push_back(s);
            if (rng() % 70 == 0) {
                KpiSample u;
                u.t = t;
                u.ue_id = 1;
                u.cell_id = 4;
                u.ho_event = HoEvent{3, 4, 1, HoCause::Native, t - 0.5};
                tel.ingest(u);
                arrivals.push_back(*u.ho_event);
            }
        }
        const double w = pol.idle_window_min * 60.0;
        const auto got = assess_idle(4, tel.view_window(end, w), pol);

        int seen = 0, hos = 0, ues = 0;
        double prb = 0.0, sched = 0.0;
        for (const auto& s : raw)
            if (s.t > end - w) {
                ++seen;
                prb = std::max(prb, s.prb_dl);
                sched = std::max(sched, s.sched_dl_mbps);
                ues = std::max(ues, s.attached_ue_count);
            }
        for (const auto& h : arrivals) hos += h.t > end - w;
        const bool expect = seen >= w && prb <= pol.idle_prb_max && sched <= pol.idle_sched_mbps_max &&
                            ues <= pol.idle_ue_max && hos / w <= pol.ho_arrival_max_hz;
        REQUIRE(got.idle == expect);
    }
}

TEST_CASE("energy actions") {
    const auto topo = testkit::grid_topology();
    XappContext ctx;
    ctx.topology = &topo;
    EnergyPolicy pol;
    KpiView v;
    v.window_s = 300.0;
    v.cells[4] = cell_agg(0.0, false);
    v.cells[4].pending_ue_count = 2;
    v.cells[5] = cell_agg(0.5);

    auto out = energy_tick(v, pol, ctx);
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == ActionKind::Wake);
    CHECK(out[0].cell == 4);

    v.cells[4].pending_ue_count = 0;
    CHECK(energy_tick(v, pol, ctx).empty());
    v.cells[6] = cell_agg(0.95);
    v.cells[5].prb_dl_mean = 0.8;
    CHECK(wake_condition(4, v, pol, &topo, {}));

    SUBCASE("a hinted sleep of a busy cell is proposed") {
        KpiView b;
        b.window_s = 300.0;
        b.cells[5] = cell_agg(0.6);
        b.cells[5].observed_s = 300.0;
        CHECK(energy_tick(b, pol, ctx).empty());
        auto p = answering({{"sleep", true}});
        ctx.provider = &p;
        const auto o = energy_tick(b, pol, ctx);
        REQUIRE(o.size() == 1);
        CHECK(o[0].kind == ActionKind::Sleep);
        CHECK(o[0].reason == "energy: hinted sleep");
    }
    SUBCASE("a recently woken cell is not put back to sleep") {
        KpiView b;
        b.window_s = 300.0;
        b.cells[5] = cell_agg(0.0);
        b.cells[5].observed_s = 300.0;
        CHECK(energy_tick(b, pol, ctx).size() == 1);
        b.cells[5].last_wake_t = 10.0;
        ctx.now = 30.0;
        CHECK(energy_tick(b, pol, ctx).empty());
    }
}
