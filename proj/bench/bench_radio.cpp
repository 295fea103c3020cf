#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ranctl/ransim.hpp"

using namespace ranctl;

namespace {

struct Fixture {
    RadioParams p;
    std::vector<CellGeometry> cells;
    std::vector<std::uint8_t> active;
    std::vector<double> x, y, sh;

    explicit Fixture(int n) {
        Simulator ref(ScenarioConfig{});
        for (const auto& c : ref.cells()) cells.push_back({c.x, c.y, c.azimuth_deg, c.tx_power_dbm});
        active.assign(cells.size(), 1);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> pos(-800, 1300);
        std::normal_distribution<double> shadow(0, 6);
        x.resize(n);
        y.resize(n);
        sh.resize(static_cast<std::size_t>(n) * cells.size());
        for (auto& v : x) v = pos(rng);
        for (auto& v : y) v = pos(rng);
        for (auto& v : sh) v = shadow(rng);
    }
    LinkInputs inputs() const { return {cells, active, x, y, sh}; }
};

void BM_LinkSerial(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    LinkMatrices m;
    for (auto _ : state) {
        link_budget_serial(f.inputs(), f.p, m);
        benchmark::DoNotOptimize(m.sinr_db.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LinkParallel(benchmark::State& state) {
    const Fixture f(static_cast<int>(state.range(0)));
    LinkMatrices m;
    for (auto _ : state) {
        link_budget_parallel(f.inputs(), f.p, m);
        benchmark::DoNotOptimize(m.sinr_db.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LinkSerial)->Arg(60)->Arg(1000)->Arg(10000);
BENCHMARK(BM_LinkParallel)->Arg(60)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
