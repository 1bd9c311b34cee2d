#pragma once

// =============================================================================
// fwgraph - graph SPDE, deterministic limit and controlled equations
// =============================================================================

#include "fwgraph/generator.hpp"
#include "fwgraph/noise.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwg {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReactionSpec {
    std::string name;
    std::function<double(double)> b, db, g, dg;
    double lip_b = 0.0;
    double lip_g = 0.0;
    /// Hoelder exponent of b'.
    double holder_exponent = 1.0;
    /// b(u) = linear_coef * u.
    bool linear_b = false;
    double linear_coef = 0.0;
    bool constant_g = false;
};

/// Registry: "zero" (b=0, g=1), "linear" (b=c u, g=1), "damped" (b=-u, g=1),
/// "sin" (b = a sin u, g = 1 + s sin u), "multiplicative" (b=0, g = 1 + s sin u).
ReactionSpec make_reaction(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> reaction_names();

struct ReactionCheck {
    double lip_b = 0.0;
    double lip_g = 0.0;
    double holder = 0.0;
    bool pass = false;
};

/// Sampled Lipschitz/Hoelder constants over a lattice in [-range, range].
ReactionCheck reaction_lipschitz_check(const ReactionSpec& r, double range = 10.0, int points = 2001);

/// phi(n, j) over time steps n and noise modes j.
struct Control {
    Eigen::MatrixXd phi;
    double dt = 0.0;

    static Control zero(std::size_t steps, std::size_t modes, double dt);
    [[nodiscard]] std::size_t steps() const { return static_cast<std::size_t>(phi.rows()); }
    [[nodiscard]] std::size_t modes() const { return static_cast<std::size_t>(phi.cols()); }
};

/// (1/2) sum phi^2 dt.
double control_energy(const Control& c);

struct SpdeConfig {
    double epsilon = 0.0;
    double dt = 0.01;
    double theta = 1.0;
    double T = 1.0;
    GraphFunction u0;
    /// Stored states are thinned to at most this many (plus the initial one).
    std::size_t max_snapshots = 256;
    [[nodiscard]] std::size_t steps() const;
};

struct PathResult {
    GraphPtr graph;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    Eigen::VectorXd terminal;
    /// Running sup of the H_gamma norm over every step.
    double sup_norm_H = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;
};

/// Shared read-only state for many paths: factorization, noise matrix, norms.
class SpdeContext {
public:
    SpdeContext(DiscreteGenerator A, ReactionSpec reaction, const NoiseBasis& basis, double dt, double theta,
                const GraphWeight& gamma = GraphWeight::constant(1.0));

    [[nodiscard]] const DiscreteGenerator& generator() const { return A_; }
    [[nodiscard]] const ReactionSpec& reaction() const { return reaction_; }
    [[nodiscard]] const ThetaScheme& scheme() const { return scheme_; }
    /// Node x mode matrix of e_j^wedge.
    [[nodiscard]] const Eigen::MatrixXd& E() const { return E_; }
    /// Consistent gamma-weighted mass: <f,h>_H = f^T Q h.
    [[nodiscard]] const SparseMatrix& Q() const { return Q_; }
    [[nodiscard]] std::size_t modes() const { return static_cast<std::size_t>(E_.cols()); }
    [[nodiscard]] double dt() const { return scheme_.dt(); }
    [[nodiscard]] double norm(const Eigen::VectorXd& f) const;
    [[nodiscard]] double pairing(const Eigen::VectorXd& f, const Eigen::VectorXd& psi) const;
    [[nodiscard]] GraphPtr graph() const { return A_.graph; }

private:
    DiscreteGenerator A_;
    ReactionSpec reaction_;
    ThetaScheme scheme_;
    Eigen::MatrixXd E_;
    SparseMatrix Q_;
};

PathResult solve_deterministic(const SpdeContext& ctx, const GraphFunction& u0, double T, std::size_t max_snapshots = 256);
PathResult solve_deterministic(const DiscreteGenerator& A, const ReactionSpec& reaction, const GraphFunction& u0, double T,
                               double dt, double theta);

PathResult solve_spde(const SpdeContext& ctx, const SpdeConfig& cfg, std::uint64_t seed, std::uint64_t sample);

/// Adds g(u) sum_j v_j(t) e_j^wedge to the drift.
PathResult solve_controlled(const SpdeContext& ctx, const SpdeConfig& cfg, const Control& v, std::uint64_t seed,
                            std::uint64_t sample);

/// Steps the moderate-deviation process M around the stored deterministic path u0
/// (every step must be stored); M(0) = 0.
PathResult solve_mdp_controlled(const SpdeContext& ctx, const SpdeConfig& cfg, double lambda, const Control& v,
                                const PathResult& u0_path, std::uint64_t seed, std::uint64_t sample);

/// (u_eps - u0) / (sqrt(eps) lambda) on the common time grid.
PathResult deviation_path(const PathResult& u_eps, const PathResult& u0, double epsilon, double lambda);

/// sup over stored times of the H_gamma distance of two paths.
double sup_distance(const SpdeContext& ctx, const PathResult& a, const PathResult& b);

/// lambda(eps) from "eps^-p" (p may be a fraction), "log", "log1p" or a number.
std::function<double(double)> parse_lambda(const std::string& spec);

}  // namespace fwg
