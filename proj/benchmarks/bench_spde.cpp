#include "fwgraph/deviations.hpp"

#include <benchmark/benchmark.h>

using namespace fwg;

namespace {

struct Fixture {
    NarrowGeometry geo = narrow_domain_coefficients(narrow_fish(32));
    NoiseBasis noise = build_spectral_basis_narrow(geo, 8, 0.1);
    SpdeContext ctx{assemble(geo.graph(), geo.coefficients()), make_reaction("sin"), noise, 0.01, 1.0};
    SpdeConfig cfg;

    Fixture() {
        cfg.epsilon = 0.01;
        cfg.dt = 0.01;
        cfg.T = 1.0;
        cfg.u0 = GraphFunction::from(geo.graph(), [](double z, int) { return z; });
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_SolveSpdePath(benchmark::State& state) {
    const Fixture& f = fixture();
    std::uint64_t sample = 0;
    for (auto _ : state) benchmark::DoNotOptimize(solve_spde(f.ctx, f.cfg, 1, sample++).terminal.data());
}
BENCHMARK(BM_SolveSpdePath);

void BM_EstimateProbability(benchmark::State& state) {
    const Fixture& f = fixture();
    const ProcessModel model = ProcessModel::make(f.ctx, f.cfg, Regime::LDP);
    RareEvent ev;
    ev.psi = GraphFunction::from(f.geo.graph(), [](double, int) { return 1.0; });
    ev.r = f.ctx.pairing(model.base.terminal, ev.psi.values) + 0.1;
    const auto workers = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(estimate_probability(ev, model, 128, 2, workers).p);
}
BENCHMARK(BM_EstimateProbability)->Arg(1)->Arg(2)->UseRealTime();

void BM_CounterNormal(benchmark::State& state) {
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(counter_normal(7, i++, 3, 11));
}
BENCHMARK(BM_CounterNormal);

}  // namespace

BENCHMARK_MAIN();
