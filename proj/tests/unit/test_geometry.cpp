#include "fwgraph/geometry.hpp"
#include "fwgraph/noise.hpp"
#include "fwgraph/metric_graph.hpp"
#include "oracle.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const ReebGeometry& double_well() {
    static const ReebGeometry geo = [] {
        const Hamiltonian H = make_hamiltonian("double_well");
        ReebOptions o;
        o.cells = 24;
        o.label_resolution = 512;
        return build_reeb_graph(H, find_critical_points(H), 4.0, o);
    }();
    return geo;
}

}  // namespace

TEST_CASE("critical points of the built-in Hamiltonians", "[geometry]") {
    for (const char* name : {"radial", "example2"}) {
        const auto cps = find_critical_points(make_hamiltonian(name));
        REQUIRE(cps.size() == 1);
        CHECK(cps[0].kind == VertexKind::Minimum);
        CHECK_THAT(cps[0].level, WithinAbs(0.0, 1e-10));
        CHECK(cps[0].x.norm() < 1e-8);
    }

    auto cps = find_critical_points(make_hamiltonian("double_well"));
    REQUIRE(cps.size() == 3);
    std::sort(cps.begin(), cps.end(), [](const auto& a, const auto& b) { return a.x.x() < b.x.x(); });
    const auto& xs = oracle()["double_well_critical_x"];
    const auto& zs = oracle()["double_well_critical_levels"];
    // the scan oracle resolves positions to one grid cell (2.5e-3)
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK_THAT(cps[i].x.x(), WithinAbs(xs[i].get<double>(), 3e-3));
        CHECK_THAT(cps[i].level, WithinAbs(zs[i].get<double>(), 1e-3));
    }
    CHECK(cps[0].kind == VertexKind::Minimum);
    CHECK(cps[1].kind == VertexKind::Saddle);
    CHECK(cps[2].kind == VertexKind::Minimum);
}

TEST_CASE("Reeb graphs of the built-in Hamiltonians", "[geometry]") {
    for (const char* name : {"radial", "example2"}) {
        const Hamiltonian H = make_hamiltonian(name);
        ReebOptions o;
        o.cells = 16;
        o.label_resolution = 256;
        const ReebGeometry geo = build_reeb_graph(H, find_critical_points(H), 4.0, o);
        CHECK(geo.graph()->edges().size() == 1);
        CHECK(geo.graph()->vertices().size() == 2);
        CHECK(geo.graph()->edge(0).unbounded());
    }
    const MetricGraph& g = *double_well().graph();
    CHECK(g.edges().size() == 3);
    CHECK(g.vertices().size() == 4);
    CHECK(validate_graph(g).valid());
    // both wells hang below the saddle, which carries the unbounded edge
    for (int k = 0; k < 2; ++k) {
        CHECK(g.vertex(g.edge(k).v_lo).kind == VertexKind::Minimum);
        CHECK(g.vertex(g.edge(k).v_hi).kind == VertexKind::Saddle);
    }
    CHECK(g.edge(2).unbounded());
    CHECK(g.vertex(g.edge(2).v_lo).kind == VertexKind::Saddle);
}

TEST_CASE("edges crossing each probe level match flood-fill component counts", "[geometry][property]") {
    const MetricGraph& g = *double_well().graph();
    const auto& probes = oracle()["double_well_probe_levels"];
    const auto& counts = oracle()["double_well_probe_components"];
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double z = probes[i].get<double>();
        int crossing = 0;
        for (const auto& e : g.edges())
            if (e.a < z && z < e.b) ++crossing;
        CHECK(crossing == counts[i].get<int>());
    }
}

TEST_CASE("contours and their coefficients", "[geometry]") {
    const Hamiltonian radial = make_hamiltonian("radial");
    const LevelContour c = trace_contour(radial, 4.0, Vec2(2.0, 0.0));
    CHECK_THAT(c.length(), WithinAbs(4.0 * M_PI, 1e-6));
    const ContourCoefficients k = compute_coefficients(trace_contour(radial, 1.0, Vec2(1.0, 0.0)));
    CHECK_THAT(k.T, WithinAbs(M_PI, 1e-6));
    CHECK_THAT(k.alpha, WithinAbs(4.0 * M_PI, 1e-4));

    const LevelContour e2 = trace_contour(make_hamiltonian("example2"), 1.0, Vec2(1.0, 0.0));
    CHECK_THAT(e2.length(), WithinAbs(oracle()["example2_length_z1"].get<double>(), 1e-4));
    CHECK((e2.points.front() - e2.points.back()).norm() < 1e-12);
}

TEST_CASE("tracing next to the saddle level is refused", "[geometry]") {
    const auto cps = find_critical_points(make_hamiltonian("double_well"));
    const auto saddle = *std::find_if(cps.begin(), cps.end(), [](const auto& c) { return c.kind == VertexKind::Saddle; });
    const Hamiltonian H = make_hamiltonian("double_well");
    CHECK_THROWS_WITH(trace_contour(H, saddle.level + 5e-4, saddle.x + Vec2(0.0, 0.02)),
                      Catch::Matchers::ContainsSubstring("near-critical contour"));
}

TEST_CASE("coefficients are stable under halving the chord tolerance", "[geometry][property]") {
    const Hamiltonian H = make_hamiltonian("example2");
    ContourOptions a, b;
    a.chord_tol = 1e-6;
    a.h_max = 0.05;
    b.chord_tol = 0.5e-6;
    b.h_max = 0.025;
    for (const double z : {0.3, 1.0, 3.0}) {
        const Vec2 seed(std::sqrt(z) * 0.8, 0.0);
        const ContourCoefficients ka = compute_coefficients(trace_contour(H, z, seed, a));
        const ContourCoefficients kb = compute_coefficients(trace_contour(H, z, seed, b));
        CHECK_THAT(ka.alpha, WithinRel(kb.alpha, 1e-4));
        CHECK_THAT(ka.T, WithinRel(kb.T, 1e-4));
    }
}

TEST_CASE("radial Hamiltonian coefficients on the Reeb graph", "[geometry]") {
    const Hamiltonian H = make_hamiltonian("radial");
    ReebOptions o;
    o.cells = 24;
    o.label_resolution = 256;
    ReebGeometry geo = build_reeb_graph(H, find_critical_points(H), 4.0, o);
    const EdgeCoefficientTable c = hamiltonian_coefficients(geo);
    geo.set_coefficients(c);
    const auto& e = geo.graph()->edge(0);
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
        CHECK_THAT(c.edges[0].T[i], WithinAbs(M_PI, 1e-5));
        if (e.grid[i] > 0.0) CHECK_THAT(c.edges[0].alpha[i] / e.grid[i], WithinAbs(4.0 * M_PI, 1e-4));
    }
    const AsymptoticFit lo = coefficient_asymptotics_check(*geo.graph(), c, e.v_lo);
    CHECK(lo.T_rel_residual < 1e-6);
    CHECK_THAT(lo.T_c2, WithinAbs(M_PI, 1e-5));
    const AsymptoticFit hi = coefficient_asymptotics_check(*geo.graph(), c, e.v_hi);
    CHECK_THAT(hi.alpha_coef, WithinRel(4.0 * M_PI, 1e-4));

    // example 2: alpha vanishes linearly at the minimum
    const Hamiltonian H2 = make_hamiltonian("example2");
    ReebGeometry g2 = build_reeb_graph(H2, find_critical_points(H2), 4.0, o);
    const EdgeCoefficientTable c2 = hamiltonian_coefficients(g2);
    const AsymptoticFit m2 = coefficient_asymptotics_check(*g2.graph(), c2, g2.graph()->edge(0).v_lo);
    CHECK(m2.alpha_coef > 0.0);
    CHECK(m2.alpha_rel_residual < 0.05);
}

TEST_CASE("period has a logarithmic singularity at the double-well saddle", "[geometry]") {
    const ReebGeometry& geo = double_well();
    const EdgeCoefficientTable c = hamiltonian_coefficients(geo);
    int saddle = -1;
    for (const auto& v : geo.graph()->vertices())
        if (v.kind == VertexKind::Saddle) saddle = v.id;
    REQUIRE(saddle >= 0);
    const AsymptoticFit fit = coefficient_asymptotics_check(*geo.graph(), c, saddle);
    CHECK(fit.T_c1 > 0.0);
    CHECK(fit.T_r2 > 0.99);
}

TEST_CASE("narrow domain coefficients", "[geometry]") {
    const NarrowGeometry rect = narrow_domain_coefficients(narrow_rectangle(0.0, 1.0, -1.0, 1.0, 16));
    CHECK(rect.graph()->edges().size() == 1);
    for (const double l : rect.coefficients().edges[0].alpha) CHECK_THAT(l, WithinAbs(2.0, 1e-14));

    const NarrowGeometry disk = narrow_domain_coefficients(narrow_disk(64));
    const auto& e = disk.graph()->edge(0);
    CHECK_THAT(e.a, WithinAbs(-1.0, 1e-14));
    CHECK_THAT(e.b, WithinAbs(1.0, 1e-14));
    for (const auto& [zs, l] : oracle()["disk_chord"].items()) {
        const double z = std::stod(zs);
        const auto s = disk.section(0, z);
        REQUIRE(s.has_value());
        CHECK_THAT(s->second - s->first, WithinAbs(l.get<double>(), 2e-3));
    }
    for (std::size_t i = 0; i < e.grid.size(); ++i)
        CHECK_THAT(disk.coefficients().edges[0].alpha[i], WithinAbs(2.0 * std::sqrt(std::max(0.0, 1.0 - e.grid[i] * e.grid[i])), 1e-6));

    const NarrowGeometry fish = narrow_domain_coefficients(narrow_fish(32));
    CHECK(fish.graph()->edges().size() == 3);
    CHECK(validate_graph(*fish.graph()).valid());
}

TEST_CASE("projection of points", "[geometry]") {
    const NarrowGeometry rect = narrow_domain_coefficients(narrow_rectangle(0.0, 1.0, -1.0, 1.0, 16));
    const auto [z, k] = rect.project(Vec2(0.3, 0.7));
    CHECK_THAT(z, WithinAbs(0.3, 1e-14));
    CHECK(k == 0);

    const Hamiltonian H = make_hamiltonian("radial");
    ReebOptions o;
    o.cells = 16;
    o.label_resolution = 256;
    const ReebGeometry radial = build_reeb_graph(H, find_critical_points(H), 4.0, o);
    const auto [zr, kr] = radial.project(Vec2(1.0, 1.0));
    CHECK_THAT(zr, WithinAbs(2.0, 1e-14));
    CHECK(kr == 0);

    const ReebGeometry& dw = double_well();
    const auto [zd, kd] = dw.project(Vec2(-1.0, 0.1));
    const Edge& e = dw.graph()->edge(kd);
    const auto& cps = dw.critical_points();
    const auto lo = std::find_if(cps.begin(), cps.end(), [&](const auto& c) { return std::abs(c.level - e.a) < 1e-9; });
    REQUIRE(lo != cps.end());
    CHECK(std::copysign(1.0, lo->x.x()) == oracle()["double_well_point_component_min_x_sign"].get<double>());
    CHECK(zd < e.b);
}

TEST_CASE("wedge projection of simple fields", "[geometry]") {
    const NarrowGeometry rect = narrow_domain_coefficients(narrow_rectangle(0.0, 1.0, -1.0, 1.0, 16));
    const GraphFunction c = wedge_project(rect, [](const Vec2&) { return 2.5; });
    for (Eigen::Index i = 0; i < c.values.size(); ++i) CHECK_THAT(c.values[i], WithinAbs(2.5, 1e-12));
    const GraphFunction odd = wedge_project(rect, [](const Vec2& x) { return x.y(); });
    CHECK(odd.values.cwiseAbs().maxCoeff() < 1e-12);

    // (f^vee)^wedge = f up to shell averaging
    const GraphFunction f = GraphFunction::from(rect.graph(), [](double z, int) { return std::sin(3.0 * z); });
    const GraphFunction back = wedge_project(rect, [&](const Vec2& x) { return vee(rect, f, x); });
    CHECK((back.values - f.values).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("wedge projection is a contraction", "[geometry][property]") {
    const NarrowGeometry disk = narrow_domain_coefficients(narrow_disk(32));
    const auto w = GraphWeight::constant();
    WedgeOptions opts;
    opts.resolution = 256;
    for (int t = 0; t < 50; ++t) {
        const double a = 1.0 + 0.37 * t, b = 0.5 + 0.11 * t, ph = 0.3 * t;
        const Field phi = [=](const Vec2& x) { return std::cos(a * x.x() + ph) * std::sin(b * x.y() + 1.0) + 0.2 * x.x() * x.y(); };
        const GraphFunction p = wedge_project(disk, phi, opts);
        // 2-D L2 norm over the disk by midpoint sampling
        double s = 0.0;
        const int n = 400;
        const double h = 2.0 / n;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const Vec2 x(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
                if (x.squaredNorm() < 1.0) s += phi(x) * phi(x) * h * h;
            }
        CHECK(norm_H(p, disk.coefficients(), w) <= std::sqrt(s) * (1.0 + 1e-3));
    }
}
