#pragma once

// =============================================================================
// fwgraph - noise modes, their graph projections and counter-based sampling
// =============================================================================

#include "fwgraph/geometry.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fwg {

using Field = std::function<double(const Vec2&)>;

/// Modes e_j = q_j * unit_j on D and their projections e_j^wedge.
struct NoiseBasis {
    std::vector<Field> unit;
    std::vector<double> q;
    /// e_j^wedge, including the factor q_j.
    std::vector<GraphFunction> projected;
    double domain_area = 0.0;

    [[nodiscard]] std::size_t size() const { return q.size(); }
    [[nodiscard]] double eval(std::size_t j, const Vec2& x) const { return q[j] * unit[j](x); }
    /// Node x mode matrix of e_j^wedge.
    [[nodiscard]] Eigen::MatrixXd matrix() const;
};

/// Neumann cosine modes of the bounding rectangle, ordered by eigenvalue,
/// normalized in L2(D), with q_j = j^-(1+eps0) (or j^-decay when decay > 0).
NoiseBasis build_spectral_basis_narrow(const NarrowGeometry& geo, std::size_t J, double eps0, double decay = -1.0,
                                       int resolution = 256);

/// Cosine/sine pairs at the given frequencies with q = sqrt(weight), so that
/// sum_j |e_j(x)|^2 = sum of weights everywhere.
NoiseBasis spectral_measure_basis(const std::vector<Vec2>& frequencies, const std::vector<double>& weights);

/// Basis given directly on the graph (no two-dimensional evaluator).
NoiseBasis graph_basis(std::vector<GraphFunction> modes);

/// Fills projected[j] = wedge(e_j).
void project_basis(NoiseBasis& basis, const Geometry& geo, const WedgeOptions& opts = {});

struct SupBound {
    double domain_sup = 0.0;
    double graph_sup = 0.0;
    [[nodiscard]] bool holds(double tol = 1e-9) const { return graph_sup <= domain_sup + tol; }
};

/// sup over D of sum |e_j|^2 and sup over graph nodes of sum |e_j^wedge|^2.
SupBound sup_bound_check(const NoiseBasis& basis, const Geometry& geo, int resolution = 256);

// =============================================================================
// Counter-based Gaussian streams
// =============================================================================

/// Standard normal keyed by (seed, sample, mode, step); independent of call order.
double counter_normal(std::uint64_t seed, std::uint64_t sample, std::uint64_t mode, std::uint64_t step);

struct WienerSample {
    /// dB(j, n): increment of mode j over step n, variance dt.
    Eigen::MatrixXd dB;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;
};

WienerSample sample_increments(std::size_t J, std::size_t Nt, double dt, std::uint64_t seed, std::uint64_t sample);

}  // namespace fwg
