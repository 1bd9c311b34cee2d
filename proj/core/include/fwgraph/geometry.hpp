#pragma once

// =============================================================================
// fwgraph - level-set geometry: Hamiltonians, Reeb graphs, narrow domains
// =============================================================================

#include "fwgraph/metric_graph.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fwg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Box {
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
    [[nodiscard]] bool contains(const Vec2& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
    [[nodiscard]] double width() const { return x1 - x0; }
    [[nodiscard]] double height() const { return y1 - y0; }
};

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// =============================================================================
// Hamiltonians
// =============================================================================

struct Hamiltonian {
    std::string name;
    std::function<double(const Vec2&)> value;
    std::function<Vec2(const Vec2&)> gradient;
    std::function<Mat2(const Vec2&)> hessian;
    Box box;
    /// Growth constants a1, a2, a3 when known in closed form.
    std::optional<std::array<double, 3>> growth;
};

/// Built-in registry: "radial" (|x|^2), "example2" (|x|^2 + sqrt(1+|x|^2) - 1),
/// "double_well" ((x1^2-1)^2 + tilt*x1 + c0 + x2^2, c0 puts the minimum at 0).
Hamiltonian make_hamiltonian(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> hamiltonian_names();

struct CriticalPoint {
    Vec2 x;
    VertexKind kind = VertexKind::Minimum;
    double level = 0.0;
    double det = 0.0;
    /// |det| / (1 + |Hessian|^2): compared against the non-degeneracy tolerance.
    double margin = 0.0;
};

struct CriticalPointOptions {
    int seeds_per_axis = 41;
    double dedup_tol = 1e-6;
    int max_newton = 60;
    double nondegeneracy_tol = 1e-8;
};

std::vector<CriticalPoint> find_critical_points(const Hamiltonian& H, const CriticalPointOptions& opts = {});

// =============================================================================
// Contours
// =============================================================================

struct LevelContour {
    int edge = -1;
    double level = 0.0;
    /// Closed polyline; points.front() == points.back().
    std::vector<Vec2> points;
    /// Arclength of every segment.
    std::vector<double> dl;
    /// |grad H| at segment start, midpoint and end.
    std::vector<std::array<double, 3>> grad;
    double min_grad = 0.0;
    [[nodiscard]] double length() const;
};

struct ContourOptions {
    double chord_tol = 1e-8;
    double h_max = 0.05;
    double h_min = 1e-7;
    /// Tracing stops with "near-critical contour" below this |grad H|.
    double grad_tol = 0.05;
    std::size_t max_steps = 4'000'000;
};

LevelContour trace_contour(const Hamiltonian& H, double z, const Vec2& seed, const ContourOptions& opts = {});

struct ContourCoefficients {
    double alpha = 0.0;
    double T = 0.0;
};

/// alpha = closed integral of |grad H| dl, T = closed integral of dl/|grad H|.
ContourCoefficients compute_coefficients(const LevelContour& contour, double grad_tol = 1e-12);

// =============================================================================
// Geometry context shared by projections
// =============================================================================

struct WedgeOptions {
    /// Sampling resolution per axis for callables.
    int resolution = 512;
    /// Empty shell bins raise unless this is set, in which case they are interpolated.
    bool fill_empty = false;
};

class Geometry {
public:
    virtual ~Geometry() = default;
    [[nodiscard]] virtual GraphPtr graph() const = 0;
    [[nodiscard]] virtual const EdgeCoefficientTable& coefficients() const = 0;
    /// Pi(x) = (z, k); throws GeometryError outside the labeled region.
    [[nodiscard]] virtual std::pair<double, int> project(const Vec2& x) const = 0;
    /// Pi(x) without throwing; k = -1 outside.
    [[nodiscard]] virtual std::pair<double, int> try_project(const Vec2& x) const = 0;
    [[nodiscard]] virtual Box bounding_box() const = 0;
};

/// Shell averages of phi over the level bins around every graph node.
GraphFunction wedge_project(const Geometry& geo, const std::function<double(const Vec2&)>& phi,
                            const WedgeOptions& opts = {});

/// Shell averages of cell samples (x_i, value_i, area_i).
GraphFunction wedge_project_samples(const Geometry& geo, const std::vector<Vec2>& points,
                                    const std::vector<double>& values, const std::vector<double>& areas,
                                    bool fill_empty = false);

/// f^vee(x) = f(Pi(x)).
double vee(const Geometry& geo, const GraphFunction& f, const Vec2& x);

// =============================================================================
// Reeb graph of a Hamiltonian
// =============================================================================

struct ReebOptions {
    std::size_t cells = 128;
    double grading = 1.15;
    int label_resolution = 1024;
    /// Neighborhood radius (in labeling cells) used to attach band components to critical points.
    int attach_radius = 3;
};

class ReebGeometry : public Geometry {
public:
    [[nodiscard]] GraphPtr graph() const override { return graph_; }
    [[nodiscard]] const EdgeCoefficientTable& coefficients() const override;
    [[nodiscard]] std::pair<double, int> project(const Vec2& x) const override;
    [[nodiscard]] std::pair<double, int> try_project(const Vec2& x) const override;
    [[nodiscard]] Box bounding_box() const override { return H_.box; }

    [[nodiscard]] const Hamiltonian& hamiltonian() const { return H_; }
    [[nodiscard]] const std::vector<CriticalPoint>& critical_points() const { return cps_; }
    [[nodiscard]] double z_max() const { return z_max_; }
    /// Point on the level-z component of edge k, transported along the gradient flow from the edge seed.
    [[nodiscard]] Vec2 seed_at_level(int k, double z) const;
    [[nodiscard]] int label_at_node(int i, int j) const { return labels_[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i)]; }
    [[nodiscard]] int label_nx() const { return nx_; }
    [[nodiscard]] int label_ny() const { return ny_; }

    void set_coefficients(EdgeCoefficientTable coeffs) { coeffs_ = std::move(coeffs); has_coeffs_ = true; }

private:
    friend ReebGeometry build_reeb_graph(const Hamiltonian&, std::vector<CriticalPoint>, double, const ReebOptions&);

    Hamiltonian H_;
    std::vector<CriticalPoint> cps_;
    GraphPtr graph_;
    EdgeCoefficientTable coeffs_;
    bool has_coeffs_ = false;
    double z_max_ = 0.0;
    int nx_ = 0, ny_ = 0;
    int search_radius_ = 3;
    std::vector<int> labels_;
    std::vector<double> levels_;
    std::vector<Vec2> seeds_;
    std::vector<double> seed_levels_;
};

/// Vertices = critical points plus O_inf; edges = connected components of the
/// level-set bands, continued across critical levels that do not touch them.
ReebGeometry build_reeb_graph(const Hamiltonian& H, std::vector<CriticalPoint> cps, double z_max,
                              const ReebOptions& opts = {});

/// Traces contours at every node and midpoint; vertex nodes and near-critical
/// samples are filled from the asymptotic fits.
EdgeCoefficientTable hamiltonian_coefficients(const ReebGeometry& geo, const ContourOptions& opts = {});

struct AsymptoticFit {
    std::string vertex_kind;
    /// alpha model: extremum c*s, saddle const, infinity c*z.
    double alpha_coef = 0.0;
    double alpha_rel_residual = 0.0;
    /// T model: const (c2) or c1*|log s| + c2.
    double T_c1 = 0.0;
    double T_c2 = 0.0;
    double T_rel_residual = 0.0;
    double T_r2 = 1.0;
    std::size_t samples = 0;
};

AsymptoticFit coefficient_asymptotics_check(const MetricGraph& g, const EdgeCoefficientTable& coeffs, int vertex,
                                            std::size_t samples = 8);

// =============================================================================
// Narrow domains
// =============================================================================

struct Section {
    double lo = 0.0;
    double hi = 0.0;
    int label = 0;
};

struct NarrowDomainSpec {
    std::vector<double> x1_grid;
    std::vector<std::vector<Section>> sections;
};

NarrowDomainSpec narrow_rectangle(double a, double b, double lo, double hi, std::size_t cells);
/// Unit disk, sections [-sqrt(1-z^2), sqrt(1-z^2)].
NarrowDomainSpec narrow_disk(std::size_t cells);
/// Trunk on [0, 1/2] splitting into two fins on [1/2, 1].
NarrowDomainSpec narrow_fish(std::size_t cells);

NarrowDomainSpec narrow_spec_from_json(const std::string& text);
std::string narrow_spec_to_json(const NarrowDomainSpec& spec);

class NarrowGeometry : public Geometry {
public:
    [[nodiscard]] GraphPtr graph() const override { return graph_; }
    [[nodiscard]] const EdgeCoefficientTable& coefficients() const override { return coeffs_; }
    [[nodiscard]] std::pair<double, int> project(const Vec2& x) const override;
    [[nodiscard]] std::pair<double, int> try_project(const Vec2& x) const override;
    [[nodiscard]] Box bounding_box() const override { return box_; }

    [[nodiscard]] const NarrowDomainSpec& spec() const { return spec_; }
    /// Cross-section interval of edge k at x1 (linear interpolation between grid points).
    [[nodiscard]] std::optional<std::pair<double, double>> section(int k, double x1) const;
    [[nodiscard]] int edge_of_label(int label) const { return label_to_edge_.at(label); }

private:
    friend NarrowGeometry narrow_domain_coefficients(const NarrowDomainSpec&);

    NarrowDomainSpec spec_;
    GraphPtr graph_;
    EdgeCoefficientTable coeffs_;
    std::map<int, int> label_to_edge_;
    std::vector<int> edge_label_;
    Box box_;
};

/// Graph from the component labels; alpha_k = T_k = l_k.
NarrowGeometry narrow_domain_coefficients(const NarrowDomainSpec& spec);

}  // namespace fwg
