#include "fwgraph/metric_graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace fwg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_saddle(const MetricGraph& g, int vertex) {
    return g.vertex(vertex).kind == VertexKind::Saddle;
}

}  // namespace

std::string to_string(VertexKind kind) {
    switch (kind) {
        case VertexKind::Minimum: return "Minimum";
        case VertexKind::Maximum: return "Maximum";
        case VertexKind::Saddle: return "Saddle";
        case VertexKind::BoundaryFold: return "BoundaryFold";
        case VertexKind::Infinity: return "Infinity";
    }
    return "Unknown";
}

VertexKind vertex_kind_from_string(const std::string& name) {
    if (name == "Minimum") return VertexKind::Minimum;
    if (name == "Maximum") return VertexKind::Maximum;
    if (name == "Saddle") return VertexKind::Saddle;
    if (name == "BoundaryFold") return VertexKind::BoundaryFold;
    if (name == "Infinity") return VertexKind::Infinity;
    throw GraphError("unknown vertex kind '" + name + "'");
}

// =============================================================================
// MetricGraph
// =============================================================================

MetricGraph::MetricGraph(std::vector<Vertex> vertices, std::vector<Edge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
    for (auto& v : vertices_) v.incident.clear();
    for (const auto& e : edges_) {
        if (e.v_lo >= 0 && static_cast<std::size_t>(e.v_lo) < vertices_.size())
            vertices_[static_cast<std::size_t>(e.v_lo)].incident.push_back({e.id, +1});
        if (e.v_hi >= 0 && static_cast<std::size_t>(e.v_hi) < vertices_.size())
            vertices_[static_cast<std::size_t>(e.v_hi)].incident.push_back({e.id, -1});
    }
    build_layout();
}

void MetricGraph::build_layout() {
    const std::size_t nv = vertices_.size();
    node_z_.assign(nv, 0.0);
    node_edge_.assign(nv, -1);
    for (std::size_t v = 0; v < nv; ++v) node_z_[v] = vertices_[v].level;

    int next = static_cast<int>(nv);
    edge_nodes_.assign(edges_.size(), {});
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const auto& e = edges_[k];
        auto& nodes = edge_nodes_[k];
        const std::size_t n = e.grid.size();
        if (n < 2) continue;
        nodes.resize(n);
        nodes.front() = e.v_lo;
        nodes.back() = e.v_hi;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            nodes[i] = next++;
            node_z_.push_back(e.grid[i]);
            node_edge_.push_back(static_cast<int>(k));
        }
        for (int v : {e.v_lo, e.v_hi}) {
            if (v < 0 || static_cast<std::size_t>(v) >= nv) continue;
            if (node_edge_[static_cast<std::size_t>(v)] < 0) node_edge_[static_cast<std::size_t>(v)] = static_cast<int>(k);
        }
        if (e.v_hi >= 0 && static_cast<std::size_t>(e.v_hi) < nv && !std::isfinite(vertices_[static_cast<std::size_t>(e.v_hi)].level))
            node_z_[static_cast<std::size_t>(e.v_hi)] = e.grid.back();
    }
    num_nodes_ = static_cast<std::size_t>(next);
}

int MetricGraph::unbounded_edge() const {
    for (const auto& e : edges_)
        if (e.unbounded()) return e.id;
    return -1;
}

ValidationReport validate_graph(const MetricGraph& g) {
    ValidationReport r;
    auto add = [&](const std::string& msg) { r.violations.push_back(msg); };
    const int nv = static_cast<int>(g.vertices().size());
    const int ne = static_cast<int>(g.edges().size());
    if (nv == 0) add("graph has no vertices");
    if (ne == 0) add("graph has no edges");

    for (int i = 0; i < nv; ++i)
        if (g.vertex(i).id != i) add("vertex " + std::to_string(i) + ": id does not match position");

    int unbounded = 0;
    for (int k = 0; k < ne; ++k) {
        const Edge& e = g.edge(k);
        const std::string tag = "edge " + std::to_string(k) + ": ";
        if (e.id != k) add(tag + "id does not match position");
        if (!(e.a < e.b)) add(tag + "degenerate interval");
        if (e.v_lo < 0 || e.v_lo >= nv || e.v_hi < 0 || e.v_hi >= nv) {
            add(tag + "vertex id out of range");
            continue;
        }
        if (e.v_lo == e.v_hi) add(tag + "self loop");
        if (std::isfinite(g.vertex(e.v_lo).level) && g.vertex(e.v_lo).level != e.a) add(tag + "a does not match level of v_lo");
        if (std::isfinite(e.b) && g.vertex(e.v_hi).level != e.b) add(tag + "b does not match level of v_hi");
        if (e.unbounded()) {
            ++unbounded;
            if (g.vertex(e.v_hi).kind != VertexKind::Infinity) add(tag + "unbounded edge must end at an Infinity vertex");
        }
        if (e.grid.size() < 2) {
            add(tag + "grid needs at least two nodes");
        } else {
            for (std::size_t i = 1; i < e.grid.size(); ++i)
                if (!(e.grid[i] > e.grid[i - 1])) {
                    add(tag + "grid not strictly increasing");
                    break;
                }
            if (e.grid.front() != e.a) add(tag + "grid does not start at a");
            if (std::isfinite(e.b) && e.grid.back() != e.b) add(tag + "grid does not end at b");
            if (!std::isfinite(e.grid.back())) add(tag + "unbounded edge grid must be truncated");
        }
    }
    if (unbounded > 1) add("more than one unbounded edge");

    for (int i = 0; i < nv; ++i) {
        const Vertex& v = g.vertex(i);
        if (v.kind == VertexKind::Infinity && v.incident.size() != 1)
            add("vertex " + std::to_string(i) + ": Infinity vertex must have exactly one incident edge");
        if (!std::isfinite(v.level) && v.kind != VertexKind::Infinity)
            add("vertex " + std::to_string(i) + ": infinite level on a finite vertex");
        if (v.incident.empty()) add("vertex " + std::to_string(i) + ": isolated vertex");
    }

    if (nv > 0 && r.valid()) {
        std::vector<char> seen(static_cast<std::size_t>(nv), 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (const auto& inc : g.vertex(v).incident) {
                const Edge& e = g.edge(inc.edge);
                for (int w : {e.v_lo, e.v_hi})
                    if (!seen[static_cast<std::size_t>(w)]) {
                        seen[static_cast<std::size_t>(w)] = 1;
                        q.push(w);
                    }
            }
        }
        if (std::find(seen.begin(), seen.end(), 0) != seen.end()) add("graph is not connected");
    }
    return r;
}

// =============================================================================
// Coefficients and weights
// =============================================================================

EdgeCoefficientTable EdgeCoefficientTable::constant(const MetricGraph& g, double alpha, double T) {
    return from_functions(g, [alpha](double, int) { return alpha; }, [T](double, int) { return T; });
}

EdgeCoefficientTable EdgeCoefficientTable::from_functions(const MetricGraph& g,
                                                          const std::function<double(double, int)>& alpha,
                                                          const std::function<double(double, int)>& T) {
    EdgeCoefficientTable t;
    t.edges.resize(g.edges().size());
    for (const auto& e : g.edges()) {
        auto& c = t.edges[static_cast<std::size_t>(e.id)];
        for (double z : e.grid) {
            c.alpha.push_back(alpha(z, e.id));
            c.T.push_back(T(z, e.id));
        }
        for (std::size_t i = 0; i + 1 < e.grid.size(); ++i) {
            const double zm = 0.5 * (e.grid[i] + e.grid[i + 1]);
            c.alpha_mid.push_back(alpha(zm, e.id));
            c.T_mid.push_back(T(zm, e.id));
        }
    }
    return t;
}

GraphWeight GraphWeight::constant(double c) {
    GraphWeight w;
    w.value = [c](double, int) { return c; };
    w.derivative = [](double, int) { return 0.0; };
    w.bounded = true;
    w.constant_ = true;
    return w;
}

GraphWeight GraphWeight::from(std::function<double(double, int)> value, std::function<double(double, int)> derivative,
                              bool bounded) {
    GraphWeight w;
    w.value = std::move(value);
    w.derivative = std::move(derivative);
    w.bounded = bounded;
    return w;
}

// =============================================================================
// GraphFunction
// =============================================================================

GraphFunction::GraphFunction(GraphPtr g) : graph(std::move(g)), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(graph->num_nodes()))) {}

GraphFunction::GraphFunction(GraphPtr g, Eigen::VectorXd v) : graph(std::move(g)), values(std::move(v)) {
    if (values.size() != static_cast<Eigen::Index>(graph->num_nodes())) throw GraphError("graph function size mismatch");
}

GraphFunction GraphFunction::from(GraphPtr g, const std::function<double(double, int)>& f) {
    GraphFunction out(g);
    for (const auto& e : g->edges()) {
        const auto& nodes = g->edge_nodes(e.id);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const bool vertex_node = (i == 0 || i + 1 == nodes.size());
            if (vertex_node && g->node_edge(nodes[i]) != e.id) continue;
            out.values[nodes[i]] = f(e.grid[i], e.id);
        }
    }
    return out;
}

double GraphFunction::at(int edge, std::size_t i) const {
    return values[graph->edge_nodes(edge).at(i)];
}

double GraphFunction::eval(double z, int k) const {
    const Edge& e = graph->edge(k);
    const auto& grid = e.grid;
    if (z <= grid.front()) return at(k, 0);
    if (z >= grid.back()) return at(k, grid.size() - 1);
    const auto it = std::upper_bound(grid.begin(), grid.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double s = (z - grid[i]) / (grid[i + 1] - grid[i]);
    return (1.0 - s) * at(k, i) + s * at(k, i + 1);
}

// =============================================================================
// Quadrature
// =============================================================================

CellQuadrature::CellQuadrature(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight)
    : graph_(&g), lumped_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_nodes()))) {
    if (coeffs.edges.size() != g.edges().size()) throw GraphError("coefficient table does not match graph");
    cells_.resize(g.edges().size());
    for (const auto& e : g.edges()) {
        const auto& c = coeffs.edges[static_cast<std::size_t>(e.id)];
        const std::size_t nc = e.cells();
        if (c.T.size() != e.grid.size() || c.T_mid.size() != nc) throw GraphError("coefficient table does not cover all grid cells");
        auto& out = cells_[static_cast<std::size_t>(e.id)];
        out.resize(nc);
        for (std::size_t i = 0; i < nc; ++i) {
            const double z0 = e.grid[i], z1 = e.grid[i + 1], zm = 0.5 * (z0 + z1), h = z1 - z0;
            const double gm = weight.value(zm, e.id);
            const bool sing_lo = (i == 0 && is_saddle(g, e.v_lo));
            const bool sing_hi = (i + 1 == nc && is_saddle(g, e.v_hi));
            if (sing_lo || sing_hi) {
                // T ~ c1 |log s| + c2 in the distance s from the saddle
                const double t_far = sing_lo ? c.T[i + 1] : c.T[i];
                const double c1 = (c.T_mid[i] - t_far) / std::log(2.0);
                const double c2 = t_far + c1 * std::log(h);
                const double lh = std::log(h);
                const double m0 = h * (1.0 - lh);
                const double m1 = 0.5 * h * (0.5 - lh);
                const double m2 = h / 3.0 * (1.0 / 3.0 - lh);
                const double vv = gm * (c1 * (m0 - 2.0 * m1 + m2) + c2 * h / 3.0);
                const double vf = gm * (c1 * (m1 - m2) + c2 * h / 6.0);
                const double ff = gm * (c1 * m2 + c2 * h / 3.0);
                out[i] = sing_lo ? std::array<double, 3>{vv, vf, ff} : std::array<double, 3>{ff, vf, vv};
            } else {
                const double w0 = weight.value(z0, e.id) * c.T[i];
                const double w1 = weight.value(z1, e.id) * c.T[i + 1];
                const double wm = gm * c.T_mid[i];
                out[i] = {h / 6.0 * (w0 + wm), h / 6.0 * wm, h / 6.0 * (wm + w1)};
            }
            const auto& nodes = g.edge_nodes(e.id);
            lumped_[nodes[i]] += out[i][0] + out[i][1];
            lumped_[nodes[i + 1]] += out[i][1] + out[i][2];
        }
    }
}

double CellQuadrature::bilinear(const Eigen::VectorXd& f, const Eigen::VectorXd& h) const {
    const auto n = static_cast<Eigen::Index>(graph_->num_nodes());
    if (f.size() != n || h.size() != n) throw GraphError("grid mismatch");
    double s = 0.0;
    for (const auto& e : graph_->edges()) {
        const auto& nodes = graph_->edge_nodes(e.id);
        const auto& cells = cells_[static_cast<std::size_t>(e.id)];
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double f0 = f[nodes[i]], f1 = f[nodes[i + 1]];
            const double h0 = h[nodes[i]], h1 = h[nodes[i + 1]];
            s += cells[i][0] * f0 * h0 + cells[i][1] * (f0 * h1 + f1 * h0) + cells[i][2] * f1 * h1;
        }
    }
    return s;
}

Eigen::VectorXd CellQuadrature::apply(const Eigen::VectorXd& f) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
    for (const auto& e : graph_->edges()) {
        const auto& nodes = graph_->edge_nodes(e.id);
        const auto& cells = cells_[static_cast<std::size_t>(e.id)];
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const int a = nodes[i], b = nodes[i + 1];
            out[a] += cells[i][0] * f[a] + cells[i][1] * f[b];
            out[b] += cells[i][1] * f[a] + cells[i][2] * f[b];
        }
    }
    return out;
}

double measure_total(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const GraphWeight& weight) {
    const double m = CellQuadrature(g, coeffs, weight).total();
    if (!std::isfinite(m)) throw GraphError("weight not integrable");
    return m;
}

namespace {

void check_grid(const GraphFunction& f) {
    if (!f.graph || f.values.size() != static_cast<Eigen::Index>(f.graph->num_nodes())) throw GraphError("grid mismatch");
}

}  // namespace

double norm_H(const GraphFunction& f, const EdgeCoefficientTable& coeffs, const GraphWeight& weight) {
    check_grid(f);
    return std::sqrt(std::max(0.0, CellQuadrature(*f.graph, coeffs, weight).bilinear(f.values, f.values)));
}

double inner_product_H(const GraphFunction& f, const GraphFunction& h, const EdgeCoefficientTable& coeffs,
                       const GraphWeight& weight) {
    check_grid(f);
    check_grid(h);
    if (f.graph != h.graph && f.graph->num_nodes() != h.graph->num_nodes()) throw GraphError("grid mismatch");
    return CellQuadrature(*f.graph, coeffs, weight).bilinear(f.values, h.values);
}

std::vector<std::vector<double>> cell_alpha_integrals(const MetricGraph& g, const EdgeCoefficientTable& coeffs,
                                                      const GraphWeight& weight) {
    std::vector<std::vector<double>> out(g.edges().size());
    for (const auto& e : g.edges()) {
        const auto& c = coeffs.edges.at(static_cast<std::size_t>(e.id));
        auto& row = out[static_cast<std::size_t>(e.id)];
        row.resize(e.cells());
        for (std::size_t i = 0; i < e.cells(); ++i) {
            const double z0 = e.grid[i], z1 = e.grid[i + 1], zm = 0.5 * (z0 + z1);
            row[i] = (z1 - z0) / 6.0 *
                     (c.alpha[i] * weight.value(z0, e.id) + 4.0 * c.alpha_mid[i] * weight.value(zm, e.id) +
                      c.alpha[i + 1] * weight.value(z1, e.id));
        }
    }
    return out;
}

double norm_W12(const GraphFunction& f, const EdgeCoefficientTable& coeffs, const GraphWeight& weight) {
    check_grid(f);
    const MetricGraph& g = *f.graph;
    double s = CellQuadrature(g, coeffs, weight).bilinear(f.values, f.values);
    const auto alpha_int = cell_alpha_integrals(g, coeffs, weight);
    for (const auto& e : g.edges()) {
        const auto& nodes = g.edge_nodes(e.id);
        for (std::size_t i = 0; i < e.cells(); ++i) {
            const double h = e.grid[i + 1] - e.grid[i];
            const double d = (f.values[nodes[i + 1]] - f.values[nodes[i]]) / h;
            s += d * d * alpha_int[static_cast<std::size_t>(e.id)][i];
        }
    }
    return std::sqrt(std::max(0.0, s));
}

// =============================================================================
// Grids and builders
// =============================================================================

std::vector<double> graded_grid(double a, double b, std::size_t cells, double ratio, bool grade_lo, bool grade_hi) {
    if (cells < 1) throw GraphError("grid needs at least one cell");
    if (!(b > a) || !std::isfinite(b)) throw GraphError("grid needs a finite interval with a < b");
    std::vector<double> w(cells, 1.0);
    if (ratio > 1.0 && (grade_lo || grade_hi)) {
        const double cap = std::pow(ratio, static_cast<double>(cells) / 8.0);
        for (std::size_t i = 0; i < cells; ++i) {
            double d = std::numeric_limits<double>::infinity();
            if (grade_lo) d = std::min(d, static_cast<double>(i));
            if (grade_hi) d = std::min(d, static_cast<double>(cells - 1 - i));
            w[i] = std::min(std::pow(ratio, d), cap);
        }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> z(cells + 1);
    z[0] = a;
    double acc = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        acc += w[i];
        z[i + 1] = a + (b - a) * acc / total;
    }
    z[cells] = b;
    return z;
}

MetricGraph interval_graph(double a, double b, std::size_t cells, VertexKind lo, VertexKind hi, double ratio) {
    std::vector<Vertex> v{{0, lo, a, {}}, {1, hi, b, {}}};
    Edge e;
    e.id = 0;
    e.a = a;
    e.b = b;
    e.v_lo = 0;
    e.v_hi = 1;
    e.grid = graded_grid(a, b, cells, ratio, ratio > 1.0, ratio > 1.0);
    return MetricGraph(std::move(v), {e});
}

MetricGraph half_line_graph(double z_max, std::size_t cells, double ratio) {
    std::vector<Vertex> v{{0, VertexKind::Minimum, 0.0, {}}, {1, VertexKind::Infinity, kInf, {}}};
    Edge e;
    e.id = 0;
    e.a = 0.0;
    e.b = kInf;
    e.v_lo = 0;
    e.v_hi = 1;
    e.grid = graded_grid(0.0, z_max, cells, ratio, ratio > 1.0, false);
    return MetricGraph(std::move(v), {e});
}

MetricGraph y_graph(double lo1, double lo2, double s, double top, std::size_t cells) {
    std::vector<Vertex> v{{0, VertexKind::Minimum, lo1, {}},
                          {1, VertexKind::Minimum, lo2, {}},
                          {2, VertexKind::Saddle, s, {}},
                          {3, VertexKind::Infinity, kInf, {}}};
    std::vector<Edge> e(3);
    e[0] = {0, lo1, s, 0, 2, graded_grid(lo1, s, cells, 1.0, false, false)};
    e[1] = {1, lo2, s, 1, 2, graded_grid(lo2, s, cells, 1.0, false, false)};
    e[2] = {2, s, kInf, 2, 3, graded_grid(s, top, cells, 1.0, false, false)};
    return MetricGraph(std::move(v), std::move(e));
}

MetricGraph star_graph(int n_edges, double len, std::size_t cells) {
    std::vector<Vertex> v;
    std::vector<Edge> e;
    v.push_back({0, VertexKind::Saddle, 0.0, {}});
    for (int k = 0; k < n_edges; ++k) {
        v.push_back({k + 1, VertexKind::Minimum, -len, {}});
        e.push_back({k, -len, 0.0, k + 1, 0, graded_grid(-len, 0.0, cells, 1.0, false, false)});
    }
    return MetricGraph(std::move(v), std::move(e));
}

// =============================================================================
// Serialization
// =============================================================================

namespace {

nlohmann::json finite_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

std::vector<nlohmann::json> array_or_null(const std::vector<double>& xs) {
    std::vector<nlohmann::json> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(finite_or_null(x));
    return out;
}

double number_or_inf(const nlohmann::json& j) {
    return j.is_null() ? kInf : j.get<double>();
}

}  // namespace

std::string graph_to_json(const MetricGraph& g, const EdgeCoefficientTable& coeffs, int indent) {
    nlohmann::json doc;
    doc["vertices"] = nlohmann::json::array();
    for (const auto& v : g.vertices())
        doc["vertices"].push_back({{"id", v.id}, {"kind", to_string(v.kind)}, {"level", finite_or_null(v.level)}});
    doc["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges())
        doc["edges"].push_back({{"id", e.id}, {"a", e.a}, {"b", finite_or_null(e.b)}, {"vlo", e.v_lo}, {"vhi", e.v_hi}, {"grid", e.grid}});
    doc["coefficients"] = nlohmann::json::object();
    for (const auto& e : g.edges()) {
        const auto& c = coeffs.edges.at(static_cast<std::size_t>(e.id));
        doc["coefficients"][std::to_string(e.id)] = {{"alpha", array_or_null(c.alpha)},
                                                     {"T", array_or_null(c.T)},
                                                     {"alpha_mid", array_or_null(c.alpha_mid)},
                                                     {"T_mid", array_or_null(c.T_mid)}};
    }
    return doc.dump(indent);
}

std::pair<MetricGraph, EdgeCoefficientTable> graph_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw GraphError(std::string("graph JSON: ") + ex.what());
    }
    std::vector<Vertex> vertices;
    for (const auto& jv : doc.at("vertices"))
        vertices.push_back({jv.at("id").get<int>(), vertex_kind_from_string(jv.at("kind").get<std::string>()),
                            number_or_inf(jv.at("level")), {}});
    std::vector<Edge> edges;
    for (const auto& je : doc.at("edges")) {
        Edge e;
        e.id = je.at("id").get<int>();
        e.a = je.at("a").get<double>();
        e.b = number_or_inf(je.at("b"));
        e.v_lo = je.at("vlo").get<int>();
        e.v_hi = je.at("vhi").get<int>();
        e.grid = je.at("grid").get<std::vector<double>>();
        edges.push_back(std::move(e));
    }
    MetricGraph g(std::move(vertices), std::move(edges));
    EdgeCoefficientTable t;
    t.edges.resize(g.edges().size());
    const auto& jc = doc.at("coefficients");
    for (const auto& e : g.edges()) {
        const auto& entry = jc.at(std::to_string(e.id));
        auto read = [&](const char* key) {
            std::vector<double> out;
            for (const auto& x : entry.at(key)) out.push_back(number_or_inf(x));
            return out;
        };
        auto& c = t.edges[static_cast<std::size_t>(e.id)];
        c.alpha = read("alpha");
        c.T = read("T");
        if (entry.contains("alpha_mid") && entry.contains("T_mid")) {
            c.alpha_mid = read("alpha_mid");
            c.T_mid = read("T_mid");
        } else {
            for (std::size_t i = 0; i + 1 < c.alpha.size(); ++i) {
                c.alpha_mid.push_back(0.5 * (c.alpha[i] + c.alpha[i + 1]));
                c.T_mid.push_back(0.5 * (c.T[i] + c.T[i + 1]));
            }
        }
        if (c.alpha.size() != e.grid.size() || c.T.size() != e.grid.size())
            throw GraphError("coefficients for edge " + std::to_string(e.id) + " do not match its grid");
    }
    return {std::move(g), std::move(t)};
}

}  // namespace fwg
