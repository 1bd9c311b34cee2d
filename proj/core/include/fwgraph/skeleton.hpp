#pragma once

// =============================================================================
// fwgraph - skeleton equations and endpoint rate functions
// =============================================================================

#include "fwgraph/spde.hpp"

#include <string>
#include <vector>

namespace fwg {

enum class Regime { LDP, MDP };
enum class RateMode { Adjoint, LqOracle };

std::string to_string(Regime r);
std::string to_string(RateMode m);

/// Minimize energy(phi) subject to <endpoint, psi> = r.
///
/// LDP: endpoint = Z^phi(T) started from u0. MDP: endpoint = R^phi(T) around
/// the deterministic path from u0, with R(0) = 0.
struct EndpointProblem {
    GraphFunction psi;
    double r = 0.0;
    Regime regime = Regime::LDP;
    GraphFunction u0;
    double T = 1.0;
    double rho0 = 10.0;
    double rho_growth = 10.0;
    int outer_iters = 6;
    /// Relative constraint residual accepted as converged.
    double tol = 1e-3;
    int inner_iters = 500;
};

struct PenaltyStep {
    double rho = 0.0;
    double objective = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

struct RateEstimate {
    double J = 0.0;
    Control phi;
    /// |<endpoint, psi> - r|.
    double residual = 0.0;
    double endpoint = 0.0;
    /// r - <u0(T), psi> (LDP) or r (MDP).
    double shifted_target = 0.0;
    std::vector<PenaltyStep> trace;
};

class RateError : public std::runtime_error {
public:
    RateError(const std::string& what, std::vector<PenaltyStep> trace) : std::runtime_error(what), trace(std::move(trace)) {}
    std::vector<PenaltyStep> trace;
};

PathResult solve_skeleton_ldp(const SpdeContext& ctx, const GraphFunction& u0, const Control& phi);
/// R equation around a deterministic path that stores every step.
PathResult solve_skeleton_mdp(const SpdeContext& ctx, const PathResult& u0_path, const Control& phi);

/// Penalized objective energy + rho (<endpoint,psi> - r)^2 and its adjoint gradient.
double endpoint_objective(const EndpointProblem& problem, const SpdeContext& ctx, const Control& phi, double rho,
                          Eigen::MatrixXd* gradient = nullptr);

/// Closed form for linear b = c u and constant g.
struct LqOracle {
    /// dt sum_n sum_j a(n,j)^2: variance of <u(T),psi> per unit eps under the scheme.
    double sigma2 = 0.0;
    /// sum_j int_0^T <S(T-s) e_j, psi>^2 ds from the eigen-expansion of the continuous-time flow.
    double sigma2_continuous = 0.0;
    /// Endpoint sensitivity a(n,j) = d<endpoint,psi>/d(dt phi(n,j)).
    Eigen::MatrixXd a;
};

LqOracle lq_oracle(const SpdeContext& ctx, const GraphFunction& psi, double T);

RateEstimate minimize_rate_endpoint(const EndpointProblem& problem, const SpdeContext& ctx, RateMode mode = RateMode::Adjoint);

/// Max relative error of the adjoint gradient against central differences.
double gradient_check(const EndpointProblem& problem, const SpdeContext& ctx, const Control& phi0,
                      const std::vector<Eigen::MatrixXd>& directions, double step = 1e-5);

/// Random unit-norm directions from the counter-based stream.
std::vector<Eigen::MatrixXd> random_directions(std::size_t count, std::size_t steps, std::size_t modes, std::uint64_t seed);

}  // namespace fwg
