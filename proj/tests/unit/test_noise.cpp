#include "fwgraph/noise.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const NarrowGeometry& unit_square() {
    static const NarrowGeometry geo = narrow_domain_coefficients(narrow_rectangle(0.0, 1.0, -0.5, 0.5, 32));
    return geo;
}

}  // namespace

TEST_CASE("single constant mode projects to its constant", "[noise]") {
    const NoiseBasis b = build_spectral_basis_narrow(unit_square(), 1, 0.1);
    REQUIRE(b.size() == 1);
    CHECK(b.q[0] == 1.0);
    CHECK_THAT(b.domain_area, WithinRel(1.0, 1e-9));
    CHECK((b.projected[0].values.array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("transverse modes vanish on the graph, longitudinal ones survive", "[noise]") {
    const NoiseBasis b = build_spectral_basis_narrow(unit_square(), 3, 0.1);
    const double eps0 = 0.1;
    for (std::size_t j = 0; j < 3; ++j) CHECK_THAT(b.q[j], WithinRel(std::pow(j + 1.0, -(1.0 + eps0)), 1e-12));
    // ties broken by (m1, m2): mode 1 is cos(pi (y+1/2)), mode 2 is cos(pi x)
    CHECK(b.projected[1].values.cwiseAbs().maxCoeff() < 1e-6);
    const auto& g = unit_square().graph();
    const GraphFunction expect =
        GraphFunction::from(g, [&](double z, int) { return b.q[2] * std::sqrt(2.0) * std::cos(M_PI * z); });
    CHECK((b.projected[2].values - expect.values).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("graph sup of the projected basis stays below the domain sup", "[noise][property]") {
    for (const std::size_t J : {1, 4, 9, 16}) {
        const NoiseBasis b = build_spectral_basis_narrow(unit_square(), J, 0.1);
        CHECK(sup_bound_check(b, unit_square()).holds());
    }
    const NarrowGeometry fish = narrow_domain_coefficients(narrow_fish(24));
    CHECK(sup_bound_check(build_spectral_basis_narrow(fish, 8, 0.1), fish).holds());
}

TEST_CASE("partial sums of squared modes grow and stay bounded by the trace", "[noise][property]") {
    double prev = 0.0, trace = 0.0;
    const NoiseBasis b = build_spectral_basis_narrow(unit_square(), 16, 0.1);
    for (std::size_t J = 1; J <= 16; ++J) {
        trace += b.q[J - 1] * b.q[J - 1];
        const NoiseBasis bj = build_spectral_basis_narrow(unit_square(), J, 0.1);
        const double s = sup_bound_check(bj, unit_square()).domain_sup;
        CHECK(s >= prev - 1e-12);
        // each unit mode is a product of two cosines scaled by at most 2
        CHECK(s <= 4.0 * trace + 1e-9);
        prev = s;
    }
}

TEST_CASE("spectral measure modes sum to the total weight everywhere", "[noise]") {
    const NoiseBasis b = spectral_measure_basis({Vec2(1.0, 0.0), Vec2(0.3, 2.0), Vec2(-4.0, 1.5)}, {0.5, 0.25, 2.0});
    REQUIRE(b.size() == 6);
    for (int i = 0; i < 20; ++i) {
        const Vec2 x(counter_normal(3, i, 0, 0) * 5.0, counter_normal(3, i, 1, 0) * 5.0);
        double s = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) s += b.eval(j, x) * b.eval(j, x);
        CHECK_THAT(s, WithinAbs(2.75, 1e-12));
    }
    CHECK_THROWS(spectral_measure_basis({Vec2(1.0, 0.0)}, {-1.0}));
}

TEST_CASE("counter normals are keyed, standard and uncorrelated", "[noise][property]") {
    CHECK(counter_normal(7, 1, 2, 3) == counter_normal(7, 1, 2, 3));
    CHECK(counter_normal(7, 1, 2, 3) != counter_normal(7, 1, 2, 4));
    CHECK(counter_normal(7, 1, 2, 3) != counter_normal(8, 1, 2, 3));
    const int n = 100000;
    double s1 = 0, s2 = 0, s4 = 0, cross = 0;
    for (int i = 0; i < n; ++i) {
        const double x = counter_normal(11, static_cast<std::uint64_t>(i), 0, 0);
        const double y = counter_normal(11, static_cast<std::uint64_t>(i), 1, 0);
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
        cross += x * y;
    }
    // 5 standard errors
    CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(s4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
    CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
}

TEST_CASE("Wiener increments have variance dt", "[noise]") {
    const double dt = 0.01;
    const WienerSample w = sample_increments(3, 20000, dt, 5, 0);
    CHECK(w.dB.rows() == 3);
    CHECK(w.dB.cols() == 20000);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double var = w.dB.row(j).squaredNorm() / 20000.0;
        CHECK(std::abs(var / dt - 1.0) < 5.0 * std::sqrt(2.0 / 20000.0));
    }
    const WienerSample again = sample_increments(3, 20000, dt, 5, 0);
    CHECK(again.dB == w.dB);
}
