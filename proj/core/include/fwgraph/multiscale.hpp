#pragma once

// =============================================================================
// fwgraph - two-dimensional multiscale solvers and graph-limit audits
// =============================================================================

#include "fwgraph/deviations.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fwg {

/// Cell-centered grid over a box with a mask of active cells.
struct Domain2D {
    Box box;
    int nx = 0, ny = 0;
    double dx = 0.0, dy = 0.0;
    std::vector<char> mask;
    /// Cell (i + nx*j) -> unknown index or -1.
    std::vector<int> unknown;
    std::vector<int> cell_of;

    [[nodiscard]] std::size_t size() const { return cell_of.size(); }
    [[nodiscard]] bool active(int i, int j) const;
    [[nodiscard]] int index(int i, int j) const;
    [[nodiscard]] Vec2 center_of(std::size_t u) const;
    [[nodiscard]] double cell_area() const { return dx * dy; }
};

using DomainPtr = std::shared_ptr<const Domain2D>;

/// Cells of the fixed narrow domain D (width not rescaled).
DomainPtr narrow_domain_grid(const NarrowGeometry& geo, int nx, int ny);
DomainPtr box_domain(const Box& box, int nx, int ny);

struct Field2D {
    DomainPtr domain;
    Eigen::VectorXd values;

    static Field2D from(DomainPtr d, const Field& f);
    [[nodiscard]] double integral() const;
    [[nodiscard]] double norm_L2() const;
};

struct FieldPath {
    DomainPtr domain;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
};

struct MultiscaleConfig {
    double delta = 0.1;
    double epsilon = 0.0;
    double dt = 0.01;
    double T = 1.0;
    std::size_t max_snapshots = 256;
    /// Smallest admissible delta.
    double delta_min = 0.02;
};

/// du = [ (1/2) u_x1x1 + (1/(2 delta^2)) u_x2x2 + b(u) ] dt + g(u) sum_j e_j (sqrt(eps) dB_j + phi_j dt)
/// on the fixed domain with Neumann walls; linear part implicit.
FieldPath solve_narrow(DomainPtr D, const MultiscaleConfig& cfg, const ReactionSpec& reaction, const NoiseBasis& noise,
                       const Field2D& u0, const Control* phi, std::uint64_t seed, std::uint64_t sample);

/// du = [ (1/2) Lap u + (1/delta) grad^perp H . grad u + b(u) ] dt + sqrt(eps) g(u) dW on a box.
/// Advection is explicit (SSP-RK3, second-order upwind faces, divergence-free face velocities).
FieldPath solve_fast_advection(const Hamiltonian& H, DomainPtr D, const MultiscaleConfig& cfg, const ReactionSpec& reaction,
                               const NoiseBasis& noise, const Field2D& u0, std::uint64_t seed, std::uint64_t sample);

/// Largest time step allowed by the advection CFL bound 0.5 dx delta / max|grad H|.
double advection_time_limit(const Hamiltonian& H, const Domain2D& D, double delta);

/// Shell averages of every snapshot.
std::vector<GraphFunction> project_field(const FieldPath& path, const Geometry& geo, bool fill_empty = true);

/// Pullback of a graph function to the active cells.
Eigen::VectorXd vee_field(const Geometry& geo, const GraphFunction& f, const Domain2D& D);

struct ConvergenceRow {
    std::size_t trial = 0;
    double delta = 0.0;
    /// sup over [tau0, T] of |S_delta(t) phi - (S(t) phi^wedge)^vee|.
    double error = 0.0;
    /// The same distance at t = 0 (initial layer).
    double error_t0 = 0.0;
};

struct ConvergenceAudit {
    std::vector<ConvergenceRow> rows;
    /// Per trial: errors strictly decrease as delta decreases.
    std::vector<bool> monotone;
    [[nodiscard]] bool all_monotone() const;
};

/// Heat flows on the fixed narrow domain and on its graph, compared in L2(D).
ConvergenceAudit semigroup_convergence_audit(const NarrowGeometry& geo, const std::vector<double>& delta_ladder,
                                             const std::vector<Field>& trials, double tau0, double T, double dt, int nx,
                                             int ny, const ReactionSpec& reaction = make_reaction("zero"));

/// Controlled/deterministic narrow solve against the graph solve with the same data.
ConvergenceAudit narrow_limit_audit(const NarrowGeometry& geo, const std::vector<double>& delta_ladder, const Field& u0,
                                    const ReactionSpec& reaction, const NoiseBasis& noise, const Control* phi,
                                    double tau0, double T, double dt, int nx, int ny);

/// delta = psi(eps) from "eps^p" (p > 0); constant maps are rejected.
std::function<double(double)> parse_psi(const std::string& spec);

struct JointLimitRow {
    double epsilon = 0.0;
    double delta = 0.0;
    MCEstimate two_d;
    MCEstimate graph;
    double plateau_two_d = 0.0;
    double plateau_graph = 0.0;
};

struct JointLimitReport {
    std::vector<JointLimitRow> rows;
    /// |plateau difference| at the smallest eps over the combined delta-method tolerance.
    bool agree_at_smallest = false;
};

/// Endpoint event <u(T), psi> > r for the narrow 2-D SPDE at delta = psi(eps) and the graph SPDE at eps.
JointLimitReport joint_limit_audit(const NarrowGeometry& geo, const std::function<double(double)>& psi_map,
                                   const std::vector<double>& eps_grid, const Field& observable, double r,
                                   const Field& u0, const ReactionSpec& reaction, const NoiseBasis& noise, double T,
                                   double dt, int nx, int ny, std::size_t N, std::uint64_t seed, unsigned workers = 1);

}  // namespace fwg
