#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ranctl/telemetry.hpp"

using namespace ranctl;

namespace {

KpiSample ue_sample(Seconds t, UeId ue, CellId cell, double dl) {
    KpiSample s;
    s.t = t;
    s.ue_id = ue;
    s.cell_id = cell;
    s.pdcp_dl_mbps = dl;
    s.sched_dl_mbps = dl;
    return s;
}

KpiSample cell_sample(Seconds t, CellId cell, double prb, bool active = true) {
    KpiSample s;
    s.t = t;
    s.cell_id = cell;
    s.prb_dl = prb;
    s.cell_active = active;
    return s;
}

// Written from the definition: smallest value with at least q*n values <= it.
double brute_percentile(const std::vector<double>& v, double q) {
    for (double cand : v) {
        std::size_t le = 0, lt = 0;
        for (double x : v) {
            if (x <= cand) ++le;
            if (x < cand) ++lt;
        }
        const double need = std::max(1.0, std::ceil(q * static_cast<double>(v.size()) - 1e-9));
        if (static_cast<double>(le) >= need && static_cast<double>(lt) < need) return cand;
    }
    return std::nan("");
}

}  // namespace

TEST_CASE("nearest-rank percentile examples") {
    std::vector<double> hundred;
    for (int i = 1; i <= 100; ++i) hundred.push_back(i);
    CHECK(percentile(hundred, 0.95) == 95.0);
    CHECK(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.10) == 1.0);
    CHECK(percentile({0.28, 0.336, 2.23}, 0.50) == 0.336);
    CHECK(percentile({5.0}, 0.0) == 5.0);
    CHECK(percentile({3, 1, 2}, 1.0) == 3.0);
    CHECK_THROWS_AS(percentile({}, 0.5), Error);
    CHECK_THROWS_AS(percentile({1.0}, 1.5), Error);
}

TEST_CASE("percentile agrees with a brute-force oracle") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<double> v(n);
        // Small integer support forces many ties.
        for (auto& x : v) x = (k % 2) ? static_cast<double>(rng() % 20) : std::uniform_real_distribution<>(0, 10)(rng);
        const double q = (k % 5 == 0) ? static_cast<double>(rng() % 21) / 20.0 : std::uniform_real_distribution<>(0, 1)(rng);
        const double got = percentile(v, q);
        REQUIRE(got == brute_percentile(v, q));
        REQUIRE(got >= *std::min_element(v.begin(), v.end()));
        REQUIRE(got <= *std::max_element(v.begin(), v.end()));
    }
}

TEST_CASE("ingest rejects bad samples") {
    Telemetry tel;
    auto s = cell_sample(1.0, 1, 1.2);
    CHECK_THROWS_AS(tel.ingest(s), Error);
    s.prb_dl = 0.5;
    s.mcs = 29;
    CHECK_THROWS_AS(tel.ingest(s), Error);
    s.mcs = 10;
    tel.ingest(s);
    CHECK_THROWS_AS(tel.ingest(cell_sample(0.5, 1, 0.5)), Error);
    CHECK_NOTHROW(tel.ingest(cell_sample(0.5, 2, 0.5)));
}

TEST_CASE("retention is bounded by the widest window") {
    TelemetryConfig cfg;
    cfg.energy_window_s = 60.0;
    cfg.retention_s = 60.0;
    Telemetry tel(cfg);
    // 10,000 samples spread over 600 s on 17 streams.
    int n = 0;
    std::size_t peak = 0;
    for (int t = 1; n < 10000; ++t)
        for (int c = 1; c <= 17 && n < 10000; ++c, ++n) {
            tel.ingest(cell_sample(t * 600.0 / 589.0, c, 0.1));
            peak = std::max(peak, tel.retained_samples());
        }
    CHECK(peak <= 17u * 60u);
    CHECK(tel.view_window(*tel.last_t(), 60.0).cells.size() == 17);
}

TEST_CASE("views aggregate the half-open window") {
    Telemetry tel;
    for (int t = 1; t <= 10; ++t) {
        tel.ingest(cell_sample(t, 1, t / 10.0));
        auto u = ue_sample(t, 5, 1, t);
        u.sinr_db = t;
        tel.ingest(u);
    }
    const KpiView v = tel.view_window(10.0, 5.0);
    const auto& c = v.cells.at(1);
    CHECK(c.prb_dl_mean == doctest::Approx((0.6 + 0.7 + 0.8 + 0.9 + 1.0) / 5));
    CHECK(c.prb_dl_max == 1.0);
    CHECK(c.observed_s == 5.0);
    const auto& u = v.ues.at(5);
    CHECK(u.pdcp_dl_mean == doctest::Approx(8.0));
    CHECK(u.sinr_median == 8.0);
    CHECK(u.serving_cell == 1);
    const KpiView empty = tel.view_window(100.0, 5.0);
    CHECK(empty.no_data());
}

TEST_CASE("dwell and handover bookkeeping") {
    Telemetry tel;
    for (int t = 1; t <= 5; ++t) tel.ingest(ue_sample(t, 1, 2, 1.0));
    auto s = ue_sample(6, 1, 3, 1.0);
    s.ho_event = HoEvent{2, 3, 1, HoCause::Native, 5.6};
    tel.ingest(s);
    tel.ingest(ue_sample(7, 1, 3, 1.0));
    const KpiView v = tel.view_window(7.0, 5.0);
    CHECK(v.ues.at(1).dwell_s == 1.0);
    CHECK(v.ues.at(1).last_native_ho_t == 5.6);
    CHECK_FALSE(v.ues.at(1).last_xapp_ho_t.has_value());
    CHECK(tel.handovers().size() == 1);
}

TEST_CASE("outcome sign tests") {
    Telemetry tel;
    for (int t = 1; t <= 30; ++t) tel.ingest(ue_sample(t, 14, t <= 10 ? 1 : 2, t <= 10 ? 0.2 : 5.0));
    ActionProposal ho = ActionProposal::ho(Agent::Qoe, 14, 1, 2, "", 10.0);
    ho.id = 1;
    tel.outcomes().track(ho, 10.0);
    CHECK_THROWS_AS(tel.outcomes().log_outcome(1, 10.0, 15.0, tel), Error);
    const auto e = tel.outcomes().log_outcome(1, 10.0, 20.0, tel);
    CHECK(e.effect.at("ue_pdcp_dl_mbps") == EffectSign::Improved);
    CHECK(e.post.t > e.pre.t);
    CHECK_THROWS_AS(tel.outcomes().log_outcome(99, 10.0, 20.0, tel), Error);

    SUBCASE("sleep undone inside the lag is worsened") {
        Telemetry t2;
        for (int t = 1; t <= 20; ++t) t2.ingest(cell_sample(t, 4, 0.0, !(t >= 5 && t < 9)));
        ActionProposal sl = ActionProposal::sleep(Agent::Energy, 4, "", 4.0);
        sl.id = 2;
        t2.outcomes().track(sl, 4.0);
        const auto r = t2.outcomes().log_outcome(2, 10.0, 14.0, t2);
        CHECK(r.effect.at("auto_revert") == EffectSign::Worsened);
        REQUIRE(t2.transitions(4).size() == 2);
        CHECK(t2.transitions(4)[0] == std::pair<Seconds, bool>{5.0, false});
    }
    SUBCASE("dead band gives neutral") {
        Telemetry t3;
        for (int t = 1; t <= 30; ++t) t3.ingest(ue_sample(t, 3, 1, t <= 10 ? 1.0 : 1.02));
        ActionProposal h = ActionProposal::ho(Agent::Qoe, 3, 1, 2, "", 10.0);
        h.id = 3;
        t3.outcomes().track(h, 10.0);
        CHECK(t3.outcomes().log_outcome(3, 10.0, 20.0, t3).effect.at("ue_pdcp_dl_mbps") == EffectSign::Neutral);
    }
}

TEST_CASE("kpi csv rows") {
    std::ostringstream out;
    write_kpi_csv_header(out);
    auto c = cell_sample(1.0, 3, 0.25);
    write_kpi_csv_row(out, c);
    auto u = ue_sample(1.0, 7, 3, 1.5);
    u.ho_event = HoEvent{2, 3, 7, HoCause::XApp, 0.6};
    write_kpi_csv_row(out, u);
    std::istringstream in(out.str());
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header.rfind("t,phase,cell_id,ue_id,", 0) == 0);
    CHECK(row1.rfind("1,normal,3,,1,0.25,", 0) == 0);
    CHECK(row1.substr(row1.size() - 3) == ",,,");
    CHECK(row2.substr(row2.size() - 9) == ",2,3,xapp");
}
