#include "fwgraph/generator.hpp"
#include "fwgraph/geometry.hpp"
#include "fwgraph/noise.hpp"
#include "oracle.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GraphPtr share(MetricGraph g) { return std::make_shared<const MetricGraph>(std::move(g)); }

DiscreteGenerator unit_interval(std::size_t cells) {
    auto g = share(interval_graph(0.0, 1.0, cells));
    return assemble(g, EdgeCoefficientTable::constant(*g, 1.0, 1.0));
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = counter_normal(seed, 0, 0, static_cast<std::uint64_t>(i));
    return v;
}

}  // namespace

TEST_CASE("stiffness is exactly symmetric and annihilates constants", "[generator][property]") {
    auto y = share(y_graph(-1.0, -0.5, 0.0, 1.0, 16));
    const auto c = EdgeCoefficientTable::from_functions(*y, [](double z, int k) { return 1.0 + z * z + 0.1 * k; },
                                                        [](double, int) { return 1.7; });
    const DiscreteGenerator A = assemble(y, c);
    const Eigen::MatrixXd K(A.K);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((K * Eigen::VectorXd::Ones(K.cols())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(A.mass.minCoeff() > 0.0);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Eigen::VectorXd f = random_vector(A.size(), s);
        CHECK(f.dot(A.K * f) >= -1e-12);
    }
}

TEST_CASE("Neumann eigenvalue of the unit interval", "[generator]") {
    std::vector<double> err;
    for (const std::size_t cells : {8, 16, 32, 64}) {
        const double lam = smallest_positive_eigenvalue(unit_interval(cells));
        CHECK_THAT(lam, WithinRel(oracle()["neumann_first_eigenvalue"][std::to_string(cells)].get<double>(), 1e-10));
        err.push_back(std::abs(lam - oracle()["neumann_continuum"].get<double>()));
    }
    for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(std::log2(err[i] / err[i + 1]) >= 1.8);
}

TEST_CASE("semigroup preserves constants and is strongly continuous", "[generator]") {
    const DiscreteGenerator A = unit_interval(32);
    const ThetaScheme s(A, 0.01, 1.0);
    const GraphFunction one = GraphFunction::from(A.graph, [](double, int) { return 3.0; });
    CHECK((step_semigroup(A, one, s).values.array() - 3.0).abs().maxCoeff() < 1e-13);

    const ThetaScheme tiny(A, 1e-8, 1.0);
    const GraphFunction f = GraphFunction::from(A.graph, [](double z, int) { return std::cos(M_PI * z) + z; });
    CHECK((step_semigroup(A, f, tiny).values - f.values).norm() < 1e-6 * f.values.norm());
}

TEST_CASE("first Neumann mode decays at the continuum rate", "[generator]") {
    const DiscreteGenerator A = unit_interval(128);
    const ThetaScheme s(A, 1e-4, 0.5);
    GraphFunction f = GraphFunction::from(A.graph, [](double z, int) { return std::cos(M_PI * z); });
    const Eigen::VectorXd mode = f.values;
    const double c0 = mode.dot(A.mass.cwiseProduct(f.values));
    for (int n = 0; n < 1000; ++n) f = step_semigroup(A, f, s);
    const double c1 = mode.dot(A.mass.cwiseProduct(f.values));
    CHECK_THAT(c1 / c0, WithinRel(oracle()["heat_first_mode_decay_t0.1"].get<double>(), 0.01));
}

TEST_CASE("total mass is conserved by the semigroup", "[generator][property]") {
    auto y = share(y_graph(-1.0, -0.5, 0.0, 1.0, 16));
    const DiscreteGenerator A = assemble(y, EdgeCoefficientTable::constant(*y, 1.0, 1.0));
    for (const double theta : {0.5, 1.0}) {
        const ThetaScheme s(A, 0.02, theta);
        GraphFunction f = GraphFunction::from(y, [](double z, int k) { return std::exp(z) + k; });
        const double m0 = A.mass.dot(f.values);
        for (int n = 0; n < 50; ++n) f = step_semigroup(A, f, s);
        CHECK_THAT(A.mass.dot(f.values), WithinRel(m0, 1e-10));
    }
}

TEST_CASE("Lq audit: contraction for unit weight", "[generator]") {
    const NarrowGeometry fish = narrow_domain_coefficients(narrow_fish(32));
    const DiscreteGenerator A = assemble(fish.graph(), fish.coefficients());
    std::vector<GraphFunction> trials{GraphFunction::from(fish.graph(), [](double z, int k) { return std::sin(5.0 * z) + k; }),
                                      GraphFunction::from(fish.graph(), [](double z, int) { return z > 0.4 && z < 0.6 ? 1.0 : 0.0; })};
    for (const double q : {2.0, 4.0}) {
        const LqAuditReport r = semigroup_audit_Lq(A, GraphWeight::constant(), q, 1.0, 0.01, 1.0, trials);
        CHECK(r.max_ratio <= 1.0 + 1e-8);
    }
}

TEST_CASE("Lq audit: bump under a power weight is mesh stable", "[generator]") {
    auto build = [](std::size_t cells) {
        auto g = share(half_line_graph(20.0, cells));
        return std::make_pair(g, EdgeCoefficientTable::from_functions(*g, [](double z, int) { return 4.0 * M_PI * z; },
                                                                      [](double, int) { return M_PI; }));
    };
    const GraphWeight w = GraphWeight::from([](double z, int) { return std::pow(z + 1.0, -2.5); },
                                            [](double z, int) { return -2.5 * std::pow(z + 1.0, -3.5); });
    const std::vector<std::function<double(double, int)>> bump{
        [](double z, int) { return 0.5 * (std::tanh(8.0 * (z - 2.0)) - std::tanh(8.0 * (z - 4.0))); }};
    for (const double q : {2.0, 4.0}) {
        const LqRefinementReport r = semigroup_refinement_study(build, {32, 64, 128}, w, q, 1.0, 0.01, 1.0, bump);
        CHECK(r.mesh_stable);
        for (const double m : r.max_ratio) CHECK(std::isfinite(m));
    }
}

TEST_CASE("gluing residual on stars and Y-graphs", "[generator]") {
    auto star = share(star_graph(3, 1.0, 8));
    const auto c = EdgeCoefficientTable::constant(*star, 2.0, 1.0);
    // odd data: slopes +1, -1, 0 towards the center cancel
    const GraphFunction odd = GraphFunction::from(star, [](double z, int k) { return k == 0 ? z : k == 1 ? -z : 0.0; });
    CHECK_THAT(gluing_residual(odd, c, 0), WithinAbs(0.0, 1e-12));
    // slope mismatch: all legs rise towards the center with slope 1 -> 3 alpha
    const GraphFunction kink = GraphFunction::from(star, [](double z, int) { return z; });
    CHECK_THAT(gluing_residual(kink, c, 0), WithinAbs(3.0 * 2.0, 1e-10));

    std::vector<double> res;
    for (const std::size_t cells : {8, 16, 32, 64}) {
        auto y = share(y_graph(-1.0, -0.5, 0.0, 1.0, cells));
        const auto yc = EdgeCoefficientTable::constant(*y, 1.0, 1.0);
        const DiscreteGenerator A = assemble(y, yc);
        const ThetaScheme s(A, 0.01, 1.0);
        GraphFunction f = GraphFunction::from(y, [](double z, int k) { return (1.0 + k) * z; });
        for (int n = 0; n < 10; ++n) f = step_semigroup(A, f, s);
        res.push_back(gluing_residual(f, yc, 2));
    }
    for (std::size_t i = 0; i + 1 < res.size(); ++i) CHECK(std::log2(res[i] / res[i + 1]) >= 1.0);
}

TEST_CASE("weight hypothesis on the radial graph", "[generator]") {
    auto g = share(half_line_graph(20.0, 400));
    const auto c = EdgeCoefficientTable::from_functions(*g, [](double z, int) { return 4.0 * M_PI * z; },
                                                        [](double, int) { return M_PI; });
    CHECK(assumption_gamma_check(*g, c, GraphWeight::constant()).sup == 0.0);

    const GraphWeight power = GraphWeight::from([](double z, int) { return std::pow(1.0 + z, -2.5); },
                                                [](double z, int) { return -2.5 * std::pow(1.0 + z, -3.5); });
    const GammaCheckReport p = assumption_gamma_check(*g, c, power);
    CHECK(p.pass());
    CHECK_THAT(p.sup, WithinRel(oracle()["gamma_check_power_sup"].get<double>(), 1e-6));

    const GraphWeight ex = GraphWeight::from([](double z, int) { return std::exp(-z); }, [](double z, int) { return -std::exp(-z); });
    const GammaCheckReport e = assumption_gamma_check(*g, c, ex);
    CHECK_FALSE(e.pass());
    CHECK_THAT(e.sup, WithinRel(4.0 * 20.0, 1e-9));
}
