#pragma once

// =============================================================================
// fwgraph - discrete generator, theta-scheme semigroup and its audits
// =============================================================================

#include "fwgraph/metric_graph.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <string>
#include <vector>

namespace fwg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Conforming P1 discretization of (1/2) d/dz(alpha d/dz) on the graph.
struct DiscreteGenerator {
    GraphPtr graph;
    EdgeCoefficientTable coeffs;
    /// Stiffness: K[f,g] ~ (1/2) sum_k int alpha_k f' g' dz.
    SparseMatrix K;
    /// Lumped mass of nu (weight 1): node weight int basis * T dz.
    Eigen::VectorXd mass;

    [[nodiscard]] Eigen::Index size() const { return mass.size(); }
};

DiscreteGenerator assemble(GraphPtr g, const EdgeCoefficientTable& coeffs);

/// Consistent gamma-weighted mass of the H_gamma inner product as a sparse matrix.
SparseMatrix weighted_mass_matrix(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight);

/// (M + theta dt K) f+ = (M - (1-theta) dt K) f with a factorization reused across steps.
class ThetaScheme {
public:
    ThetaScheme(const DiscreteGenerator& A, double dt, double theta);

    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] double theta() const { return theta_; }
    /// (M + theta dt K)^{-1} rhs.
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    /// (M - (1-theta) dt K) f.
    [[nodiscard]] Eigen::VectorXd explicit_part(const Eigen::VectorXd& f) const;
    [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& f) const { return solve(explicit_part(f)); }
    [[nodiscard]] const SparseMatrix& system() const { return system_; }
    [[nodiscard]] const SparseMatrix& explicit_operator() const { return explicit_; }

private:
    double dt_;
    double theta_;
    SparseMatrix system_;
    SparseMatrix explicit_;
    std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> solver_;
};

GraphFunction step_semigroup(const DiscreteGenerator& A, const GraphFunction& f, const ThetaScheme& scheme);

/// Generalized eigenpairs K v = lambda M v, ascending, with V^T M V = I.
struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};
Spectrum generator_spectrum(const DiscreteGenerator& A);
double smallest_positive_eigenvalue(const DiscreteGenerator& A);

/// Weighted L^q norm with the gamma-weighted lumped mass.
double norm_Lq(const Eigen::VectorXd& f, const Eigen::VectorXd& weighted_mass, double q);

struct LqAuditReport {
    double q = 2.0;
    double T = 1.0;
    /// max over the time grid of |S(t)f|_q / |f|_q, per trial.
    std::vector<double> ratios;
    double max_ratio = 0.0;
    /// ln(max_ratio)/T: the fitted exponent in the e^{cT} bound.
    double rate = 0.0;
};

LqAuditReport semigroup_audit_Lq(const DiscreteGenerator& A, const GraphWeight& weight, double q, double T, double dt,
                                 double theta, const std::vector<GraphFunction>& trials);

struct LqRefinementReport {
    std::vector<std::size_t> cells;
    std::vector<double> max_ratio;
    bool mesh_stable = false;
};

/// Repeats the audit on a refinement ladder; trials are rebuilt on each mesh.
LqRefinementReport semigroup_refinement_study(
    const std::function<std::pair<GraphPtr, EdgeCoefficientTable>(std::size_t)>& build,
    const std::vector<std::size_t>& cells, const GraphWeight& weight, double q, double T, double dt, double theta,
    const std::vector<std::function<double(double, int)>>& trials, double tolerance = 0.05);

/// |sum_j alpha_{k_j}(z_v) f'_j(z_v)| with outward one-sided quotients, second order when an edge has 3+ nodes.
double gluing_residual(const GraphFunction& f, const EdgeCoefficientTable& coeffs, int vertex);

struct GammaCheckReport {
    double sup = 0.0;
    double argmax_z = 0.0;
    int argmax_edge = -1;
    double sup_half_range = 0.0;
    double sup_coarse = 0.0;
    bool finite = false;
    bool mesh_stable = false;
    [[nodiscard]] bool pass() const { return finite && mesh_stable; }
};

/// sup over nodes of alpha |dgamma/dz|^2 / (T gamma^2).
GammaCheckReport assumption_gamma_check(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight,
                                        double tolerance = 0.05);

/// Coordinate text dump "row col value" of a sparse matrix.
void dump_matrix(const SparseMatrix& m, const std::string& path);

}  // namespace fwg
