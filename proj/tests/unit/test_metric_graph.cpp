#include "fwgraph/generator.hpp"
#include "fwgraph/metric_graph.hpp"
#include "fwgraph/noise.hpp"
#include "oracle.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GraphPtr share(MetricGraph g) { return std::make_shared<const MetricGraph>(std::move(g)); }

}  // namespace

TEST_CASE("validate_graph accepts the single edge and the Y-graph", "[metric_graph]") {
    CHECK(validate_graph(interval_graph(0.0, 1.0, 4)).valid());
    CHECK(validate_graph(y_graph(-1.0, -0.5, 0.0, 1.0, 8)).valid());
    CHECK(validate_graph(star_graph(3, 1.0, 4)).valid());
    CHECK(validate_graph(half_line_graph(10.0, 16)).valid());
}

TEST_CASE("a degenerate interval is reported", "[metric_graph]") {
    std::vector<Vertex> v{{0, VertexKind::Minimum, 0.5, {}}, {1, VertexKind::Maximum, 0.5, {}}};
    std::vector<Edge> e{{0, 0.5, 0.5, 0, 1, {0.5, 0.5}}};
    bool reported = false;
    try {
        const auto r = validate_graph(MetricGraph(v, e));
        for (const auto& s : r.violations) reported = reported || s.find("degenerate interval") != std::string::npos;
    } catch (const GraphError& err) {
        reported = std::string(err.what()).find("degenerate interval") != std::string::npos;
    }
    CHECK(reported);
}

TEST_CASE("node layout puts vertices first and shares them between edges", "[metric_graph]") {
    const MetricGraph g = y_graph(-1.0, -0.5, 0.0, 1.0, 4);
    CHECK(g.num_nodes() == 4 + 3 * 3);
    for (const auto& e : g.edges()) {
        CHECK(g.edge_nodes(e.id).front() == e.v_lo);
        CHECK(g.edge_nodes(e.id).back() == e.v_hi);
    }
    CHECK(g.unbounded_edge() == 2);
}

TEST_CASE("measure_total on constant and radial coefficients", "[metric_graph]") {
    const MetricGraph g = interval_graph(0.0, 1.0, 8);
    CHECK_THAT(measure_total(g, EdgeCoefficientTable::constant(g, 1.0, 2.0), GraphWeight::constant()), WithinRel(2.0, 1e-14));

    const MetricGraph h = half_line_graph(10.0, 64);
    const auto c = EdgeCoefficientTable::from_functions(h, [](double z, int) { return 4.0 * M_PI * z; },
                                                        [](double, int) { return M_PI; });
    CHECK_THAT(measure_total(h, c, GraphWeight::constant()), WithinRel(oracle()["radial_measure_total_zmax10"].get<double>(), 1e-12));

    const GraphWeight w = GraphWeight::from([](double z, int) { return std::pow(z + 1.0, -2.5); },
                                            [](double z, int) { return -2.5 * std::pow(z + 1.0, -3.5); });
    const double m = measure_total(h, c, w);
    CHECK(std::isfinite(m));
    CHECK(m > 0.0);
}

TEST_CASE("H and W12 norms of simple functions", "[metric_graph]") {
    auto g = share(interval_graph(0.0, 1.0, 64));
    const auto c2 = EdgeCoefficientTable::constant(*g, 1.0, 2.0);
    const auto c1 = EdgeCoefficientTable::constant(*g, 1.0, 1.0);
    const GraphFunction zero(g);
    const GraphFunction one = GraphFunction::from(g, [](double, int) { return 1.0; });
    const GraphFunction lin = GraphFunction::from(g, [](double z, int) { return z; });

    CHECK(norm_H(zero, c2, GraphWeight::constant()) == 0.0);
    CHECK_THAT(norm_H(one, c2, GraphWeight::constant()), WithinRel(std::sqrt(2.0), 1e-13));
    CHECK_THAT(norm_H(lin, c2, GraphWeight::constant()), WithinRel(oracle()["norm_H_z_T2"].get<double>(), 1e-4));
    CHECK_THAT(norm_W12(lin, c1, GraphWeight::constant()), WithinRel(oracle()["norm_W12_z"].get<double>(), 1e-4));
    CHECK_THAT(norm_W12(one, c1, GraphWeight::constant()), WithinRel(norm_H(one, c1, GraphWeight::constant()), 1e-14));
}

TEST_CASE("inner product: zero, polarization and discrete mode orthogonality", "[metric_graph]") {
    auto g = share(interval_graph(0.0, 1.0, 32));
    const auto c = EdgeCoefficientTable::constant(*g, 1.0, 1.0);
    const auto w = GraphWeight::constant();
    const GraphFunction f = GraphFunction::from(g, [](double z, int) { return std::exp(z) * std::sin(3.0 * z); });
    CHECK(inner_product_H(f, GraphFunction(g), c, w) == 0.0);
    const double n = norm_H(f, c, w);
    CHECK_THAT(inner_product_H(f, f, c, w), WithinRel(n * n, 1e-12));

    // modes of the lumped discretization are orthogonal in the lumped mass
    const DiscreteGenerator A = assemble(g, c);
    const Spectrum sp = generator_spectrum(A);
    const Eigen::VectorXd v0 = sp.vectors.col(0), v1 = sp.vectors.col(1);
    CHECK_THAT(v0.dot(A.mass.cwiseProduct(v1)), WithinAbs(0.0, 1e-10));
    CHECK_THAT(sp.values[1], WithinRel(oracle()["neumann_first_eigenvalue"]["32"].get<double>(), 1e-10));
}

TEST_CASE("triangle inequality over random pairs", "[metric_graph][property]") {
    auto g = share(y_graph(-1.0, -0.5, 0.0, 1.0, 16));
    const auto c = EdgeCoefficientTable::from_functions(*g, [](double z, int) { return 1.0 + z * z; },
                                                        [](double, int k) { return 1.0 + 0.5 * k; });
    const auto w = GraphWeight::constant();
    const auto n = static_cast<Eigen::Index>(g->num_nodes());
    for (std::uint64_t s = 0; s < 120; ++s) {
        Eigen::VectorXd a(n), b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a[i] = counter_normal(s, 0, 0, static_cast<std::uint64_t>(i));
            b[i] = counter_normal(s, 1, 0, static_cast<std::uint64_t>(i));
        }
        const GraphFunction fa(g, a), fb(g, b), fs(g, a + b);
        CHECK(norm_H(fs, c, w) <= norm_H(fa, c, w) + norm_H(fb, c, w) + 1e-12);
    }
}

TEST_CASE("norm of a smooth function converges at second order", "[metric_graph][property]") {
    auto f = [](double z, int) { return std::cos(2.0 * z) + z; };
    std::vector<double> err;
    const double exact = std::sqrt(0.5 * (1.0 + std::sin(4.0) / 4.0) + 2.0 * (std::cos(2.0) / 4.0 + std::sin(2.0) / 2.0 - 0.25) + 1.0 / 3.0);
    for (const std::size_t cells : {16, 32, 64}) {
        auto g = share(interval_graph(0.0, 1.0, cells));
        err.push_back(std::abs(norm_H(GraphFunction::from(g, f), EdgeCoefficientTable::constant(*g, 1.0, 1.0), GraphWeight::constant()) - exact));
    }
    CHECK(err[0] / err[1] > 3.5);
    CHECK(err[1] / err[2] > 3.5);
}

TEST_CASE("graph JSON round trip keeps field names and values", "[metric_graph]") {
    const MetricGraph g = y_graph(-1.0, -0.5, 0.0, 1.0, 4);
    const auto c = EdgeCoefficientTable::from_functions(g, [](double z, int) { return 1.0 + z * z; },
                                                        [](double, int) { return 2.0; });
    const std::string text = graph_to_json(g, c);
    for (const char* key : {"\"vertices\"", "\"edges\"", "\"coefficients\"", "\"vlo\"", "\"vhi\"", "\"grid\"", "\"alpha\"", "\"T\""})
        CHECK(text.find(key) != std::string::npos);
    const auto [g2, c2] = graph_from_json(text);
    REQUIRE(g2.edges().size() == g.edges().size());
    for (const auto& e : g.edges()) {
        CHECK(g2.edge(e.id).grid == e.grid);
        CHECK(c2.edges[static_cast<std::size_t>(e.id)].alpha == c.edges[static_cast<std::size_t>(e.id)].alpha);
    }
}
