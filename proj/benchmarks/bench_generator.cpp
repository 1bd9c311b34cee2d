#include "fwgraph/generator.hpp"
#include "fwgraph/geometry.hpp"

#include <benchmark/benchmark.h>

using namespace fwg;

namespace {

NarrowGeometry fish(std::size_t cells) { return narrow_domain_coefficients(narrow_fish(cells)); }

void BM_Assemble(benchmark::State& state) {
    const NarrowGeometry geo = fish(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assemble(geo.graph(), geo.coefficients()));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Assemble)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_ThetaStep(benchmark::State& state) {
    const NarrowGeometry geo = fish(static_cast<std::size_t>(state.range(0)));
    const DiscreteGenerator A = assemble(geo.graph(), geo.coefficients());
    const ThetaScheme s(A, 1e-3, 1.0);
    Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(A.size(), 0.0, 1.0);
    for (auto _ : state) {
        f = s.step(f);
        benchmark::DoNotOptimize(f.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ThetaStep)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_Spectrum(benchmark::State& state) {
    auto g = std::make_shared<const MetricGraph>(interval_graph(0.0, 1.0, static_cast<std::size_t>(state.range(0))));
    const DiscreteGenerator A = assemble(g, EdgeCoefficientTable::constant(*g, 1.0, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(smallest_positive_eigenvalue(A));
}
BENCHMARK(BM_Spectrum)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
