#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include <omp.h>

#include "ranctl/ransim.hpp"

using namespace ranctl;

namespace {

std::string stream_of(Simulator& sim, int seconds) {
    std::ostringstream out;
    for (int i = 0; i < seconds; ++i)
        for (const auto& s : sim.advance_second()) write_kpi_csv_row(out, s);
    return out.str();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("phase schedule") {
    ScenarioConfig cfg;
    cfg.phases = ScenarioConfig::default_phases();
    CHECK(cfg.phase_at(50) == Phase::Normal);
    CHECK(cfg.phase_at(150) == Phase::Emergency);
    CHECK(cfg.phase_at(250) == Phase::Recovery);
    CHECK(cfg.phase_at(300) == Phase::Recovery);
    CHECK_THROWS_AS(cfg.phase_at(301), Error);
}

TEST_CASE("scenario validation") {
    ScenarioConfig cfg;
    cfg.phases = ScenarioConfig::default_phases();
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.phases[1].start = 120;
    CHECK_THROWS_AS(bad.validate(), ParseError);
    bad = cfg;
    bad.surge.multiplier = 0.5;
    CHECK_THROWS_AS(bad.validate(), ParseError);
    bad = cfg;
    bad.n_ues = 0;
    CHECK_THROWS_AS(bad.validate(), ParseError);
}

TEST_CASE("default grid") {
    Simulator sim(ScenarioConfig{});
    REQUIRE(sim.cells().size() == 9);
    CHECK(sim.ues().size() == 20);
    CHECK(sim.neighbors(1) == std::vector<CellId>{2, 3, 6, 8, 9});
    CHECK(sim.neighbors(4) == std::vector<CellId>{5, 6});
    for (const auto& c : sim.cells())
        for (CellId n : sim.neighbors(c.id)) {
            const auto& back = sim.neighbors(n);
            CHECK(std::find(back.begin(), back.end(), c.id) != back.end());
        }
}

TEST_CASE("identical seeds give identical streams") {
    Simulator a(ScenarioConfig{}), b(ScenarioConfig{});
    CHECK(stream_of(a, 60) == stream_of(b, 60));
    ScenarioConfig other;
    other.seed = 2;
    Simulator c(other), d(ScenarioConfig{});
    CHECK(stream_of(c, 10) != stream_of(d, 10));
}

TEST_CASE("samples on the second grid") {
    Simulator sim(ScenarioConfig{});
    for (int i = 0; i < 9; ++i) CHECK(sim.step().empty());
    const auto s = sim.step();
    CHECK(s.size() == 9 + 20);
    CHECK(sim.now() == 1.0);
    for (const auto& x : s) {
        CHECK(x.t == 1.0);
        CHECK(x.prb_dl >= 0.0);
        CHECK(x.prb_dl <= 1.0);
        CHECK(x.mcs >= 0);
        CHECK(x.mcs <= 28);
    }
}

TEST_CASE("sleep reattaches and respects min-active") {
    Simulator sim(ScenarioConfig{});
    sim.advance_second();
    // Cells 1..3 sit on site 0.
    std::vector<UeId> on_cell;
    CellId target = 1;
    for (CellId c : {1, 2, 3}) {
        int n = 0;
        for (const auto& u : sim.ues()) n += u.serving == c;
        if (n > 0) {
            target = c;
            break;
        }
    }
    for (const auto& u : sim.ues())
        if (u.serving == target) on_cell.push_back(u.id);
    REQUIRE(sim.set_cell_state(target, true).applied);
    for (UeId u : on_cell) {
        CHECK(sim.ue(u).serving != target);
        CHECK(sim.cell(sim.ue(u).serving).active);
    }
    const auto events = sim.take_events();
    CHECK(events.size() == on_cell.size());
    for (const auto& e : events) CHECK(e.cause == HoCause::Reattach);

    std::vector<CellId> others;
    for (CellId c : {1, 2, 3})
        if (c != target) others.push_back(c);
    CHECK(sim.set_cell_state(others[0], true).applied);
    const auto r = sim.set_cell_state(others[1], true);
    CHECK_FALSE(r.applied);
    CHECK(r.reason == "min-active");
    CHECK(sim.active_cells_at_site(0) == 1);

    // Sleeping cells serve nothing.
    for (const auto& s : sim.advance_second())
        if (!s.ue_id && !s.cell_active) {
            CHECK(s.pdcp_dl_mbps == 0.0);
            CHECK(s.attached_ue_count == 0);
        }
    CHECK(sim.apply_ho(1, target).reason == "target-sleeping");
    CHECK(sim.set_cell_state(target, false).applied);
    CHECK(sim.set_cell_state(target, false).reason == "no-op");
}

TEST_CASE("offsets clamp at the bound") {
    Simulator sim(ScenarioConfig{});
    CHECK(sim.apply_offset(1, 2, 5.5).value == 5.5);
    CHECK(sim.apply_offset(1, 2, 1.0).value == 6.0);
    CHECK(sim.offset_db(1, 2) == 6.0);
    CHECK(sim.apply_offset(1, 2, -20.0).value == -6.0);
    CHECK(sim.offset_db(2, 1) == 0.0);
    CHECK_FALSE(sim.apply_offset(1, 1, 1.0).applied);
    CHECK_FALSE(sim.apply_offset(1, 42, 1.0).applied);
}

TEST_CASE("A2/A4 trigger") {
    const NativeHoConfig cfg;
    CHECK(cfg.a2_threshold_db() == -5.5);
    CHECK(cfg.hysteresis_db() == 0.5);
    CHECK(a2_entered(-12.0, cfg));
    CHECK_FALSE(a2_entered(-5.5, cfg));

    SUBCASE("serving -12 dB, neighbour -6 dB") {
        const std::vector<double> scores{kNegInf, -6.0};
        CHECK(a4_pick(-12.0, scores, cfg) == 1);
    }
    SUBCASE("hysteresis is strict") {
        const std::vector<double> scores{kNegInf, -11.5};
        CHECK(a4_pick(-12.0, scores, cfg) == -1);
    }
    SUBCASE("an offset breaks an RSRQ tie") {
        const double rsrq = -10.0;
        CHECK(a4_pick(rsrq, std::vector<double>{kNegInf, rsrq}, cfg) == -1);
        CHECK(a4_pick(rsrq, std::vector<double>{kNegInf, rsrq + 6.0, rsrq + 1.0}, cfg) == 1);
    }
    SUBCASE("no eligible neighbour") {
        CHECK(a4_pick(-15.0, std::vector<double>{kNegInf, kNegInf}, cfg) == -1);
    }
}

TEST_CASE("xApp handover and hold") {
    Simulator sim(ScenarioConfig{});
    sim.advance_second();
    const Ue& u = sim.ue(1);
    const CellId from = u.serving;
    const CellId to = from == 9 ? 8 : from + 1;
    CHECK(sim.apply_ho(1, from).reason == "no-op");
    REQUIRE(sim.apply_ho(1, to, 10.0).applied);
    CHECK(sim.ue(1).serving == to);
    const auto ev = sim.take_events();
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].cause == HoCause::XApp);
    CHECK(ev[0].from == from);
    CHECK_FALSE(sim.apply_ho(99, 1).applied);
}

TEST_CASE("radio kernel parallel matches serial bitwise") {
    RadioParams p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-800, 1300);
    std::normal_distribution<double> shadow(0, 6);
    Simulator ref(ScenarioConfig{});
    std::vector<CellGeometry> cells;
    for (const auto& c : ref.cells()) cells.push_back({c.x, c.y, c.azimuth_deg, c.tx_power_dbm});
    for (int n : {1, 20, 300, 1000}) {
        std::vector<double> x(n), y(n), sh(static_cast<std::size_t>(n) * cells.size());
        for (auto& v : x) v = pos(rng);
        for (auto& v : y) v = pos(rng);
        for (auto& v : sh) v = shadow(rng);
        std::vector<std::uint8_t> active(cells.size(), 1);
        active[4] = 0;
        LinkInputs in{cells, active, x, y, sh};
        LinkMatrices a, b;
        link_budget_serial(in, p, a);
        for (int threads : {1, 2, 4, 7}) {
            omp_set_num_threads(threads);
            link_budget_parallel(in, p, b);
            REQUIRE(std::memcmp(a.rsrp_dbm.data(), b.rsrp_dbm.data(), a.rsrp_dbm.size() * sizeof(double)) == 0);
            REQUIRE(std::memcmp(a.sinr_db.data(), b.sinr_db.data(), a.sinr_db.size() * sizeof(double)) == 0);
            REQUIRE(std::memcmp(a.rsrq_db.data(), b.rsrq_db.data(), a.rsrq_db.size() * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("link budget oracle") {
    RadioParams p;
    CHECK(pathloss_db(1000.0, p) == doctest::Approx(128.1));
    CHECK(pathloss_db(100.0, p) == doctest::Approx(128.1 - 35.0));
    CHECK(pathloss_db(1.0, p) == pathloss_db(p.min_distance_m, p));
    CHECK(antenna_gain_db(0.0, p) == 0.0);
    CHECK(antenna_gain_db(35.0, p) == doctest::Approx(-3.0));
    CHECK(antenna_gain_db(180.0, p) == -20.0);
    CHECK(antenna_gain_db(-35.0, p) == antenna_gain_db(35.0, p));
    CHECK(antenna_gain_db(395.0, p) == doctest::Approx(antenna_gain_db(35.0, p)));

    // One UE on the boresight of a lone cell: noise-limited SINR.
    std::vector<CellGeometry> cells{{0, 0, 0, 46}};
    std::vector<std::uint8_t> active{1};
    std::vector<double> x{500}, y{0}, sh{0};
    LinkMatrices m;
    link_budget_serial({cells, active, x, y, sh}, p, m);
    const double rx = 46.0 - pathloss_db(500.0, p);
    CHECK(m.rsrp(0, 0) == doctest::Approx(rx));
    CHECK(m.sinr(0, 0) == doctest::Approx(rx - p.noise_dbm));
}
