#include "fwgraph/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace fwg {

Eigen::MatrixXd NoiseBasis::matrix() const {
    if (projected.size() != q.size() || projected.empty()) throw GraphError("noise basis is not projected");
    Eigen::MatrixXd E(projected.front().values.size(), static_cast<Eigen::Index>(projected.size()));
    for (std::size_t j = 0; j < projected.size(); ++j) E.col(static_cast<Eigen::Index>(j)) = projected[j].values;
    return E;
}

NoiseBasis build_spectral_basis_narrow(const NarrowGeometry& geo, std::size_t J, double eps0, double decay, int resolution) {
    if (J < 1) throw GraphError("noise basis needs J >= 1");
    const Box b = geo.bounding_box();
    const double lx = b.width(), ly = b.height();
    // Neumann eigenvalues of the rectangle, lowest J
    std::vector<std::tuple<double, int, int>> modes;
    const int mmax = static_cast<int>(J) + 1;
    for (int m1 = 0; m1 <= mmax; ++m1)
        for (int m2 = 0; m2 <= mmax; ++m2)
            modes.emplace_back(m1 * m1 / (lx * lx) + m2 * m2 / (ly * ly), m1, m2);
    std::sort(modes.begin(), modes.end());
    modes.resize(J);

    // L2(D) normalization on a midpoint grid restricted to D
    const int n = std::max(8, resolution);
    const double dx = lx / n, dy = ly / n;
    std::vector<Vec2> inside;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 x(b.x0 + (i + 0.5) * dx, b.y0 + (j + 0.5) * dy);
            if (geo.try_project(x).second >= 0) inside.push_back(x);
        }
    NoiseBasis basis;
    basis.domain_area = static_cast<double>(inside.size()) * dx * dy;
    const double p = decay > 0.0 ? decay : 1.0 + eps0;
    for (std::size_t j = 0; j < J; ++j) {
        const int m1 = std::get<1>(modes[j]), m2 = std::get<2>(modes[j]);
        const double x0 = b.x0, y0 = b.y0;
        Field raw = [=](const Vec2& x) {
            return std::cos(m1 * std::numbers::pi * (x.x() - x0) / lx) * std::cos(m2 * std::numbers::pi * (x.y() - y0) / ly);
        };
        double s = 0.0;
        for (const auto& x : inside) s += raw(x) * raw(x);
        const double norm = std::sqrt(s * dx * dy);
        basis.unit.push_back([raw, norm](const Vec2& x) { return raw(x) / norm; });
        basis.q.push_back(std::pow(static_cast<double>(j + 1), -p));
    }
    project_basis(basis, geo, {resolution, false});
    return basis;
}

NoiseBasis spectral_measure_basis(const std::vector<Vec2>& frequencies, const std::vector<double>& weights) {
    if (frequencies.size() != weights.size() || frequencies.empty()) throw GraphError("frequency and weight lists differ");
    NoiseBasis basis;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (weights[i] < 0.0) throw GraphError("negative spectral weight");
        const Vec2 xi = frequencies[i];
        basis.unit.push_back([xi](const Vec2& x) { return std::cos(xi.dot(x)); });
        basis.unit.push_back([xi](const Vec2& x) { return std::sin(xi.dot(x)); });
        basis.q.push_back(std::sqrt(weights[i]));
        basis.q.push_back(std::sqrt(weights[i]));
    }
    return basis;
}

NoiseBasis graph_basis(std::vector<GraphFunction> modes) {
    NoiseBasis basis;
    basis.q.assign(modes.size(), 1.0);
    basis.projected = std::move(modes);
    return basis;
}

void project_basis(NoiseBasis& basis, const Geometry& geo, const WedgeOptions& opts) {
    basis.projected.clear();
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const Field& u = basis.unit[j];
        const double qj = basis.q[j];
        basis.projected.push_back(wedge_project(geo, [&](const Vec2& x) { return qj * u(x); }, opts));
    }
}

SupBound sup_bound_check(const NoiseBasis& basis, const Geometry& geo, int resolution) {
    SupBound s;
    const Box b = geo.bounding_box();
    const int n = std::max(8, resolution);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const Vec2 x(b.x0 + b.width() * i / n, b.y0 + b.height() * j / n);
            if (geo.try_project(x).second < 0) continue;
            double acc = 0.0;
            for (std::size_t m = 0; m < basis.size(); ++m) acc += basis.eval(m, x) * basis.eval(m, x);
            s.domain_sup = std::max(s.domain_sup, acc);
        }
    if (!basis.projected.empty()) {
        const Eigen::MatrixXd E = basis.matrix();
        s.graph_sup = E.rowwise().squaredNorm().maxCoeff();
    }
    return s;
}

// =============================================================================
// Sampling
// =============================================================================

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double to_unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t sample, std::uint64_t mode, std::uint64_t step) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ sample);
    h = splitmix64(h ^ (mode * 0xD1B54A32D192ED03ULL));
    h = splitmix64(h ^ (step * 0x8CB92BA72F3D8DD7ULL));
    const double u1 = to_unit(h);
    const double u2 = to_unit(splitmix64(h ^ 0xA0761D6478BD642FULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

WienerSample sample_increments(std::size_t J, std::size_t Nt, double dt, std::uint64_t seed, std::uint64_t sample) {
    WienerSample w;
    w.dt = dt;
    w.seed = seed;
    w.sample = sample;
    w.dB.resize(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(Nt));
    const double s = std::sqrt(dt);
    for (std::size_t n = 0; n < Nt; ++n)
        for (std::size_t j = 0; j < J; ++j)
            w.dB(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = s * counter_normal(seed, sample, j, n);
    return w;
}

}  // namespace fwg
