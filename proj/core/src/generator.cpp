#include "fwgraph/generator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fwg {

DiscreteGenerator assemble(GraphPtr g, const EdgeCoefficientTable& coeffs) {
    DiscreteGenerator A;
    A.graph = g;
    A.coeffs = coeffs;
    const auto n = static_cast<Eigen::Index>(g->num_nodes());
    const GraphWeight one = GraphWeight::constant(1.0);
    const auto alpha_int = cell_alpha_integrals(*g, coeffs, one);
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& e : g->edges()) {
        const auto& nodes = g->edge_nodes(e.id);
        for (std::size_t i = 0; i < e.cells(); ++i) {
            const double h = e.grid[i + 1] - e.grid[i];
            const double c = 0.5 * alpha_int[static_cast<std::size_t>(e.id)][i] / (h * h);
            const int a = nodes[i], b = nodes[i + 1];
            trip.emplace_back(a, a, c);
            trip.emplace_back(b, b, c);
            trip.emplace_back(a, b, -c);
            trip.emplace_back(b, a, -c);
        }
    }
    A.K.resize(n, n);
    A.K.setFromTriplets(trip.begin(), trip.end());
    A.mass = CellQuadrature(*g, coeffs, one).lumped();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(A.mass[i] > 0.0) || !std::isfinite(A.mass[i]))
            throw GraphError("nonpositive mass weight at node " + std::to_string(i));
    return A;
}

SparseMatrix weighted_mass_matrix(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight) {
    const CellQuadrature quad(g, coeffs, weight);
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& e : g.edges()) {
        const auto& nodes = g.edge_nodes(e.id);
        for (std::size_t i = 0; i < e.cells(); ++i) {
            const auto& c = quad.cell(e.id, i);
            const int a = nodes[i], b = nodes[i + 1];
            trip.emplace_back(a, a, c[0]);
            trip.emplace_back(a, b, c[1]);
            trip.emplace_back(b, a, c[1]);
            trip.emplace_back(b, b, c[2]);
        }
    }
    SparseMatrix Q(n, n);
    Q.setFromTriplets(trip.begin(), trip.end());
    return Q;
}

// =============================================================================
// Theta scheme
// =============================================================================

ThetaScheme::ThetaScheme(const DiscreteGenerator& A, double dt, double theta) : dt_(dt), theta_(theta) {
    if (!(dt > 0.0)) throw GraphError("time step must be positive");
    if (theta < 0.5 || theta > 1.0) throw GraphError("theta must lie in [1/2, 1]");
    SparseMatrix M(A.size(), A.size());
    M.reserve(Eigen::VectorXi::Constant(A.size(), 1));
    for (Eigen::Index i = 0; i < A.size(); ++i) M.insert(i, i) = A.mass[i];
    system_ = M + (theta * dt) * A.K;
    explicit_ = M - ((1.0 - theta) * dt) * A.K;
    auto solver = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(system_);
    if (solver->info() != Eigen::Success) throw GraphError("factorization of the implicit system failed");
    solver_ = solver;
}

Eigen::VectorXd ThetaScheme::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = solver_->solve(rhs);
    if (solver_->info() != Eigen::Success) throw GraphError("implicit solve failed");
    return x;
}

Eigen::VectorXd ThetaScheme::explicit_part(const Eigen::VectorXd& f) const { return explicit_ * f; }

GraphFunction step_semigroup(const DiscreteGenerator& A, const GraphFunction& f, const ThetaScheme& scheme) {
    if (f.values.size() != A.size()) throw GraphError("grid mismatch");
    return GraphFunction(A.graph, scheme.step(f.values));
}

// =============================================================================
// Spectrum
// =============================================================================

Spectrum generator_spectrum(const DiscreteGenerator& A) {
    const Eigen::MatrixXd K = Eigen::MatrixXd(A.K);
    const Eigen::MatrixXd M = A.mass.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    if (es.info() != Eigen::Success) throw GraphError("generalized eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

double smallest_positive_eigenvalue(const DiscreteGenerator& A) {
    const Spectrum s = generator_spectrum(A);
    const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
        if (s.values[i] > 1e-10 * scale) return s.values[i];
    throw GraphError("no positive eigenvalue");
}

// =============================================================================
// L^q audit
// =============================================================================

double norm_Lq(const Eigen::VectorXd& f, const Eigen::VectorXd& weighted_mass, double q) {
    return std::pow((weighted_mass.array() * f.array().abs().pow(q)).sum(), 1.0 / q);
}

LqAuditReport semigroup_audit_Lq(const DiscreteGenerator& A, const GraphWeight& weight, double q, double T, double dt,
                                 double theta, const std::vector<GraphFunction>& trials) {
    if (q < 2.0) throw GraphError("q must be at least 2");
    const ThetaScheme scheme(A, dt, theta);
    const Eigen::VectorXd wm = CellQuadrature(*A.graph, A.coeffs, weight).lumped();
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    LqAuditReport r;
    r.q = q;
    r.T = T;
    for (const auto& f : trials) {
        const double n0 = norm_Lq(f.values, wm, q);
        if (!(n0 > 0.0)) throw GraphError("trial function has zero norm");
        Eigen::VectorXd u = f.values;
        double best = 1.0;
        for (std::size_t s = 0; s < steps; ++s) {
            u = scheme.step(u);
            best = std::max(best, norm_Lq(u, wm, q) / n0);
        }
        r.ratios.push_back(best);
        r.max_ratio = std::max(r.max_ratio, best);
    }
    r.rate = std::log(std::max(r.max_ratio, 1.0)) / T;
    return r;
}

LqRefinementReport semigroup_refinement_study(
    const std::function<std::pair<GraphPtr, EdgeCoefficientTable>(std::size_t)>& build,
    const std::vector<std::size_t>& cells, const GraphWeight& weight, double q, double T, double dt, double theta,
    const std::vector<std::function<double(double, int)>>& trials, double tolerance) {
    LqRefinementReport r;
    for (const std::size_t c : cells) {
        auto [g, coeffs] = build(c);
        const DiscreteGenerator A = assemble(g, coeffs);
        std::vector<GraphFunction> fs;
        for (const auto& t : trials) fs.push_back(GraphFunction::from(g, t));
        r.cells.push_back(c);
        r.max_ratio.push_back(semigroup_audit_Lq(A, weight, q, T, dt, theta, fs).max_ratio);
    }
    r.mesh_stable = r.max_ratio.size() >= 2 && std::all_of(r.max_ratio.begin(), r.max_ratio.end(), [](double x) { return std::isfinite(x); });
    if (r.mesh_stable) {
        const double last = r.max_ratio.back(), prev = r.max_ratio[r.max_ratio.size() - 2];
        r.mesh_stable = std::abs(last - prev) <= tolerance * last;
    }
    return r;
}

// =============================================================================
// Vertex conditions and weight checks
// =============================================================================

double gluing_residual(const GraphFunction& f, const EdgeCoefficientTable& coeffs, int vertex) {
    const MetricGraph& g = *f.graph;
    const Vertex& v = g.vertex(vertex);
    double s = 0.0;
    for (const auto& inc : v.incident) {
        const Edge& e = g.edge(inc.edge);
        const auto& nodes = g.edge_nodes(e.id);
        const auto& c = coeffs.edges.at(static_cast<std::size_t>(e.id));
        const bool at_lo = inc.sign > 0;
        const std::size_t n = nodes.size();
        const std::size_t iv = at_lo ? 0 : n - 1;
        const std::size_t i1 = at_lo ? 1 : n - 2;
        const double f0 = f.values[nodes[iv]], f1 = f.values[nodes[i1]];
        const double d1 = std::abs(e.grid[i1] - e.grid[iv]);
        double slope = (f1 - f0) / d1;
        if (n >= 3) {
            // second-order one-sided quotient on a possibly graded grid
            const std::size_t i2 = at_lo ? 2 : n - 3;
            const double f2 = f.values[nodes[i2]];
            const double d2 = std::abs(e.grid[i2] - e.grid[iv]);
            slope = -(d1 + d2) / (d1 * d2) * f0 + d2 / (d1 * (d2 - d1)) * f1 - d1 / (d2 * (d2 - d1)) * f2;
        }
        s += c.alpha[iv] * slope;
    }
    return std::abs(s);
}

GammaCheckReport assumption_gamma_check(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight,
                                        double tolerance) {
    GammaCheckReport r;
    if (weight.is_constant()) {
        r.finite = r.mesh_stable = true;
        return r;
    }
    double zmax = 0.0;
    for (const auto& e : g.edges()) zmax = std::max(zmax, e.grid.back());
    const double half = 0.5 * zmax;
    for (const auto& e : g.edges()) {
        const auto& c = coeffs.edges.at(static_cast<std::size_t>(e.id));
        for (std::size_t i = 0; i < e.grid.size(); ++i) {
            const double z = e.grid[i];
            if (!std::isfinite(c.T[i]) || !(c.T[i] > 0.0)) continue;
            const double gm = weight.value(z, e.id);
            const double dg = weight.derivative(z, e.id);
            const double v = c.alpha[i] * dg * dg / (c.T[i] * gm * gm);
            if (!std::isfinite(v)) {
                r.sup = v;
                continue;
            }
            if (v > r.sup) {
                r.sup = v;
                r.argmax_z = z;
                r.argmax_edge = e.id;
            }
            if (z <= half) r.sup_half_range = std::max(r.sup_half_range, v);
            if (i % 2 == 0) r.sup_coarse = std::max(r.sup_coarse, v);
        }
    }
    r.finite = std::isfinite(r.sup);
    const double scale = std::max(r.sup, 1e-300);
    r.mesh_stable = r.finite && std::abs(r.sup - r.sup_half_range) <= tolerance * scale &&
                    std::abs(r.sup - r.sup_coarse) <= tolerance * scale;
    return r;
}

void dump_matrix(const SparseMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw GraphError("cannot open " + path);
    out.precision(17);
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace fwg
