#pragma once

// =============================================================================
// fwgraph - metric graphs, weighted measures and graph function norms
// =============================================================================

#include <Eigen/Core>

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwg {

enum class VertexKind { Minimum, Maximum, Saddle, BoundaryFold, Infinity };

std::string to_string(VertexKind kind);
VertexKind vertex_kind_from_string(const std::string& name);

/// Edge attached to a vertex; sign is +1 when the level coordinate grows away from the vertex.
struct Incidence {
    int edge = 0;
    int sign = +1;
};

struct Vertex {
    int id = 0;
    VertexKind kind = VertexKind::Minimum;
    double level = 0.0;
    std::vector<Incidence> incident;
};

struct Edge {
    int id = 0;
    double a = 0.0;
    double b = 1.0;  // +inf for the unbounded edge
    int v_lo = 0;
    int v_hi = 1;
    std::vector<double> grid;

    [[nodiscard]] bool unbounded() const { return b == std::numeric_limits<double>::infinity(); }
    [[nodiscard]] std::size_t cells() const { return grid.empty() ? 0 : grid.size() - 1; }
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vertices, edges and the shared-vertex node layout.
///
/// Node numbering: one node per vertex (index = vertex id), then the interior
/// grid nodes of every edge in edge order.
class MetricGraph {
public:
    MetricGraph() = default;
    /// Incidence lists are rebuilt from the edges; ids must equal positions.
    MetricGraph(std::vector<Vertex> vertices, std::vector<Edge> edges);

    [[nodiscard]] const std::vector<Vertex>& vertices() const { return vertices_; }
    [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
    [[nodiscard]] const Vertex& vertex(int id) const { return vertices_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] const Edge& edge(int id) const { return edges_.at(static_cast<std::size_t>(id)); }

    [[nodiscard]] std::size_t num_nodes() const { return num_nodes_; }
    /// Global node indices along edge k, from z_{k,0} to z_{k,N_k}.
    [[nodiscard]] const std::vector<int>& edge_nodes(int k) const { return edge_nodes_.at(static_cast<std::size_t>(k)); }
    /// Level coordinate and an owning edge for every node.
    [[nodiscard]] double node_level(int node) const { return node_z_.at(static_cast<std::size_t>(node)); }
    [[nodiscard]] int node_edge(int node) const { return node_edge_.at(static_cast<std::size_t>(node)); }

    /// Index of the unbounded edge, or -1.
    [[nodiscard]] int unbounded_edge() const;

private:
    void build_layout();

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> edge_nodes_;
    std::vector<double> node_z_;
    std::vector<int> node_edge_;
    std::size_t num_nodes_ = 0;
};

using GraphPtr = std::shared_ptr<const MetricGraph>;

struct ValidationReport {
    std::vector<std::string> violations;
    [[nodiscard]] bool valid() const { return violations.empty(); }
};

ValidationReport validate_graph(const MetricGraph& g);

// =============================================================================
// Coefficients and weights
// =============================================================================

/// alpha_k and T_k at grid nodes and cell midpoints of every edge.
struct EdgeCoefficients {
    std::vector<double> alpha;
    std::vector<double> T;
    std::vector<double> alpha_mid;
    std::vector<double> T_mid;
};

struct EdgeCoefficientTable {
    std::vector<EdgeCoefficients> edges;

    /// Constant coefficients on every edge of g.
    static EdgeCoefficientTable constant(const MetricGraph& g, double alpha, double T);
    /// Coefficients from callables alpha(z,k), T(z,k).
    static EdgeCoefficientTable from_functions(const MetricGraph& g,
                                               const std::function<double(double, int)>& alpha,
                                               const std::function<double(double, int)>& T);
};

struct GraphWeight {
    std::function<double(double, int)> value;
    std::function<double(double, int)> derivative;
    bool bounded = true;

    static GraphWeight constant(double c = 1.0);
    static GraphWeight from(std::function<double(double, int)> value,
                            std::function<double(double, int)> derivative,
                            bool bounded = true);
    [[nodiscard]] bool is_constant() const { return constant_; }

private:
    bool constant_ = false;
};

// =============================================================================
// Graph functions
// =============================================================================

struct GraphFunction {
    GraphPtr graph;
    Eigen::VectorXd values;

    GraphFunction() = default;
    explicit GraphFunction(GraphPtr g);
    GraphFunction(GraphPtr g, Eigen::VectorXd v);

    /// Nodal interpolant of f(z,k); vertex nodes use the first incident edge.
    static GraphFunction from(GraphPtr g, const std::function<double(double, int)>& f);

    [[nodiscard]] double at(int edge, std::size_t i) const;
    /// Piecewise-linear evaluation at level z on edge k.
    [[nodiscard]] double eval(double z, int k) const;
};

/// Per-cell 2x2 quadrature of int phi_a phi_b w dz for w = weight * T.
///
/// Regular cells use Simpson's rule, exact for linear f and linear w. Cells
/// touching a saddle vertex integrate a fitted c1|log s| + c2 model of T.
class CellQuadrature {
public:
    CellQuadrature(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight);

    /// Entries (I00, I01, I11) of cell c on edge k.
    [[nodiscard]] const std::array<double, 3>& cell(int k, std::size_t c) const { return cells_[static_cast<std::size_t>(k)][c]; }
    [[nodiscard]] double bilinear(const Eigen::VectorXd& f, const Eigen::VectorXd& h) const;
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
    /// Row sums: node weight int basis * w dz.
    [[nodiscard]] const Eigen::VectorXd& lumped() const { return lumped_; }
    [[nodiscard]] double total() const { return lumped_.sum(); }

private:
    const MetricGraph* graph_;
    std::vector<std::vector<std::array<double, 3>>> cells_;
    Eigen::VectorXd lumped_;
};

double measure_total(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight);
double norm_H(const GraphFunction& f, const EdgeCoefficientTable& coeffs, const GraphWeight& weight);
double norm_W12(const GraphFunction& f, const EdgeCoefficientTable& coeffs, const GraphWeight& weight);
double inner_product_H(const GraphFunction& f, const GraphFunction& h, const EdgeCoefficientTable& coeffs,
                       const GraphWeight& weight);

/// Integral of alpha * weight over every cell (Simpson).
std::vector<std::vector<double>> cell_alpha_integrals(const MetricGraph& g, const EdgeCoefficientTable& coeffs,
                                                      const GraphWeight& weight);

// =============================================================================
// Grids and builders
// =============================================================================

/// Graded node array on [a,b]; cell sizes grow geometrically away from the
/// graded ends and saturate at ratio^(n/8).
std::vector<double> graded_grid(double a, double b, std::size_t cells, double ratio, bool grade_lo, bool grade_hi);

/// Single edge (a,b) with two vertices of the given kinds.
MetricGraph interval_graph(double a, double b, std::size_t cells, VertexKind lo = VertexKind::BoundaryFold,
                           VertexKind hi = VertexKind::BoundaryFold, double ratio = 1.0);

/// Half line [0, z_max] attached to a minimum and an Infinity vertex.
MetricGraph half_line_graph(double z_max, std::size_t cells, double ratio = 1.0);

/// Three edges glued at one saddle: two from minima at levels lo1, lo2 up to
/// the saddle level s, one from s up to top (Infinity truncated at top).
MetricGraph y_graph(double lo1, double lo2, double s, double top, std::size_t cells);

/// Symmetric star: n_edges edges of length len hanging below one saddle at level 0.
MetricGraph star_graph(int n_edges, double len, std::size_t cells);

// =============================================================================
// Serialization
// =============================================================================

std::string graph_to_json(const MetricGraph& g, const EdgeCoefficientTable& coeffs, int indent = 2);
/// Parses the graph document; coefficient midpoints are linear interpolants.
std::pair<MetricGraph, EdgeCoefficientTable> graph_from_json(const std::string& text);

}  // namespace fwg
