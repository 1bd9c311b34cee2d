#include "fwgraph/geometry.hpp"

#include <benchmark/benchmark.h>

using namespace fwg;

namespace {

void BM_TraceContour(benchmark::State& state) {
    const Hamiltonian H = make_hamiltonian("example2");
    ContourOptions o;
    o.chord_tol = std::pow(10.0, -static_cast<double>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(trace_contour(H, 1.0, Vec2(0.8, 0.0), o).length());
}
BENCHMARK(BM_TraceContour)->DenseRange(6, 10, 2);

void BM_ReebGraph(benchmark::State& state) {
    const Hamiltonian H = make_hamiltonian("double_well");
    const auto cps = find_critical_points(H);
    ReebOptions o;
    o.cells = 32;
    o.label_resolution = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_reeb_graph(H, cps, 4.0, o).graph());
}
BENCHMARK(BM_ReebGraph)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_NarrowCoefficients(benchmark::State& state) {
    const NarrowDomainSpec spec = narrow_disk(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(narrow_domain_coefficients(spec).graph());
}
BENCHMARK(BM_NarrowCoefficients)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
