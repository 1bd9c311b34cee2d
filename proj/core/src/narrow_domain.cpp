#include "fwgraph/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace fwg {

using json = nlohmann::json;

// =============================================================================
// Bundled cross-section descriptions
// =============================================================================

NarrowDomainSpec narrow_rectangle(double a, double b, double lo, double hi, std::size_t cells) {
    NarrowDomainSpec s;
    for (std::size_t i = 0; i <= cells; ++i) {
        s.x1_grid.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(cells));
        s.sections.push_back({{lo, hi, 0}});
    }
    return s;
}

NarrowDomainSpec narrow_disk(std::size_t cells) {
    NarrowDomainSpec s;
    for (std::size_t i = 0; i <= cells; ++i) {
        double z = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(cells);
        if (i == 0) z = -1.0;
        if (i == cells) z = 1.0;
        const double h = std::sqrt(std::max(0.0, 1.0 - z * z));
        s.x1_grid.push_back(z);
        s.sections.push_back({{-h, h, 0}});
    }
    return s;
}

NarrowDomainSpec narrow_fish(std::size_t cells) {
    if (cells % 2 != 0) ++cells;
    NarrowDomainSpec s;
    for (std::size_t i = 0; i <= cells; ++i) {
        const double z = static_cast<double>(i) / static_cast<double>(cells);
        s.x1_grid.push_back(z);
        std::vector<Section> sec;
        if (2 * i <= cells) sec.push_back({-0.3, 0.3, 0});
        if (2 * i >= cells) {
            sec.push_back({-0.6, -0.1, 1});
            sec.push_back({0.1, 0.6, 2});
        }
        s.sections.push_back(sec);
    }
    return s;
}

NarrowDomainSpec narrow_spec_from_json(const std::string& text) {
    const json doc = json::parse(text);
    NarrowDomainSpec s;
    s.x1_grid = doc.at("x1_grid").get<std::vector<double>>();
    for (const auto& row : doc.at("sections")) {
        std::vector<Section> sec;
        for (const auto& item : row) sec.push_back({item.at(0).get<double>(), item.at(1).get<double>(), item.at(2).get<int>()});
        s.sections.push_back(sec);
    }
    return s;
}

std::string narrow_spec_to_json(const NarrowDomainSpec& spec) {
    json doc;
    doc["x1_grid"] = spec.x1_grid;
    json rows = json::array();
    for (const auto& sec : spec.sections) {
        json row = json::array();
        for (const auto& s : sec) row.push_back(json::array({s.lo, s.hi, s.label}));
        rows.push_back(row);
    }
    doc["sections"] = rows;
    return doc.dump(2);
}

// =============================================================================
// Graph from cross-section labels
// =============================================================================

namespace {

const Section* find_label(const std::vector<Section>& sec, int label) {
    for (const auto& s : sec)
        if (s.label == label) return &s;
    return nullptr;
}

}  // namespace

NarrowGeometry narrow_domain_coefficients(const NarrowDomainSpec& spec) {
    const std::size_t n = spec.x1_grid.size();
    if (n < 2) throw GeometryError("narrow domain needs at least two x1 grid points");
    if (spec.sections.size() != n) throw GeometryError("sections and x1_grid differ in length");
    for (std::size_t i = 1; i < n; ++i)
        if (!(spec.x1_grid[i] > spec.x1_grid[i - 1])) throw GeometryError("x1_grid not strictly increasing");

    struct Span {
        std::size_t first = 0, last = 0;
    };
    std::map<int, Span> spans;
    for (std::size_t i = 0; i < n; ++i) {
        std::set<int> seen;
        for (const auto& s : spec.sections[i]) {
            if (s.hi < s.lo) throw GeometryError("(D2) violated: section with hi < lo at x1=" + std::to_string(spec.x1_grid[i]));
            if (!seen.insert(s.label).second) throw GeometryError("duplicate label in one cross-section");
            auto it = spans.find(s.label);
            if (it == spans.end()) {
                spans[s.label] = {i, i};
            } else {
                if (it->second.last + 1 != i) throw GeometryError("(D2) violated: label " + std::to_string(s.label) + " is not contiguous in x1");
                it->second.last = i;
            }
        }
        // disjointness of the intervals in one cross-section
        std::vector<Section> sorted = spec.sections[i];
        std::sort(sorted.begin(), sorted.end(), [](const Section& a, const Section& b) { return a.lo < b.lo; });
        for (std::size_t q = 1; q < sorted.size(); ++q)
            if (sorted[q].lo < sorted[q - 1].hi && spans[sorted[q].label].first != i && spans[sorted[q].label].last != i &&
                spans[sorted[q - 1].label].first != i && spans[sorted[q - 1].label].last != i)
                throw GeometryError("(D2) violated: overlapping components at x1=" + std::to_string(spec.x1_grid[i]));
    }
    for (const auto& [label, sp] : spans) {
        if (sp.first == sp.last) throw GeometryError("label " + std::to_string(label) + " occupies a single x1 point");
        for (std::size_t i = sp.first + 1; i < sp.last; ++i) {
            const Section* s = find_label(spec.sections[i], label);
            if (!(s->hi - s->lo > 0.0))
                throw GeometryError("(D3) violated: zero-length component at x1=" + std::to_string(spec.x1_grid[i]));
        }
    }

    // endpoint events grouped into fold vertices
    struct Event {
        int label;
        std::size_t index;
        bool start;
    };
    std::vector<Event> events;
    for (const auto& [label, sp] : spans) {
        events.push_back({label, sp.first, true});
        events.push_back({label, sp.last, false});
    }
    std::vector<int> parent(events.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)];
        return a;
    };
    for (std::size_t p = 0; p < events.size(); ++p)
        for (std::size_t q = p + 1; q < events.size(); ++q) {
            const Event &ep = events[p], &eq = events[q];
            if (ep.index != eq.index || ep.start == eq.start) continue;
            const Section* sp = find_label(spec.sections[ep.index], ep.label);
            const Section* sq = find_label(spec.sections[eq.index], eq.label);
            if (std::max(sp->lo, sq->lo) <= std::min(sp->hi, sq->hi))
                parent[static_cast<std::size_t>(find(static_cast<int>(p)))] = find(static_cast<int>(q));
        }
    std::map<int, int> root_vertex;
    std::vector<int> event_vertex(events.size());
    std::vector<Vertex> vertices;
    // vertex ids ordered by level, then by first event
    std::vector<std::size_t> ev_order(events.size());
    std::iota(ev_order.begin(), ev_order.end(), 0);
    std::stable_sort(ev_order.begin(), ev_order.end(), [&](std::size_t a, std::size_t b) { return events[a].index < events[b].index; });
    for (std::size_t p : ev_order) {
        const int r = find(static_cast<int>(p));
        auto it = root_vertex.find(r);
        if (it == root_vertex.end()) {
            const int id = static_cast<int>(vertices.size());
            root_vertex[r] = id;
            vertices.push_back({id, VertexKind::BoundaryFold, spec.x1_grid[events[p].index], {}});
            event_vertex[p] = id;
        } else {
            event_vertex[p] = it->second;
        }
    }
    std::vector<int> ending(vertices.size(), 0), starting(vertices.size(), 0);
    for (std::size_t p = 0; p < events.size(); ++p) (events[p].start ? starting : ending)[static_cast<std::size_t>(event_vertex[p])]++;
    for (std::size_t v = 0; v < vertices.size(); ++v)
        if (ending[v] >= 2 && starting[v] >= 2)
            throw GeometryError("(D4) violated: fold at x1=" + std::to_string(vertices[v].level) + " merges and splits branches");

    // edges ordered by (first x1, label)
    std::vector<int> labels;
    for (const auto& [label, sp] : spans) labels.push_back(label);
    std::stable_sort(labels.begin(), labels.end(), [&](int a, int b) { return spans[a].first < spans[b].first; });

    NarrowGeometry geo;
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const int label = labels[k];
        const Span sp = spans[label];
        Edge e;
        e.id = static_cast<int>(k);
        e.a = spec.x1_grid[sp.first];
        e.b = spec.x1_grid[sp.last];
        for (std::size_t p = 0; p < events.size(); ++p) {
            if (events[p].label != label) continue;
            (events[p].start ? e.v_lo : e.v_hi) = event_vertex[p];
        }
        e.grid.assign(spec.x1_grid.begin() + static_cast<std::ptrdiff_t>(sp.first),
                      spec.x1_grid.begin() + static_cast<std::ptrdiff_t>(sp.last) + 1);
        EdgeCoefficients c;
        for (std::size_t i = sp.first; i <= sp.last; ++i) {
            const Section* s = find_label(spec.sections[i], label);
            const double l = s->hi - s->lo;
            c.alpha.push_back(l);
            c.T.push_back(l);
            if (i < sp.last) {
                const Section* s1 = find_label(spec.sections[i + 1], label);
                const double lm = 0.5 * (l + (s1->hi - s1->lo));
                c.alpha_mid.push_back(lm);
                c.T_mid.push_back(lm);
            }
        }
        edges.push_back(std::move(e));
        geo.coeffs_.edges.push_back(std::move(c));
        geo.label_to_edge_[label] = static_cast<int>(k);
        geo.edge_label_.push_back(label);
    }

    geo.spec_ = spec;
    geo.graph_ = std::make_shared<MetricGraph>(std::move(vertices), std::move(edges));
    const auto report = validate_graph(*geo.graph_);
    if (!report.valid()) throw GeometryError("narrow-domain graph invalid: " + report.violations.front());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& sec : spec.sections)
        for (const auto& s : sec) {
            lo = std::min(lo, s.lo);
            hi = std::max(hi, s.hi);
        }
    geo.box_ = {spec.x1_grid.front(), spec.x1_grid.back(), lo, hi};
    return geo;
}

std::optional<std::pair<double, double>> NarrowGeometry::section(int k, double x1) const {
    const int label = edge_label_.at(static_cast<std::size_t>(k));
    const auto& g = spec_.x1_grid;
    if (x1 < g.front() || x1 > g.back()) return std::nullopt;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), x1) - g.begin());
    i = i == 0 ? 0 : i - 1;
    if (i + 1 >= g.size()) i = g.size() - 2;
    const Section* s0 = find_label(spec_.sections[i], label);
    const Section* s1 = find_label(spec_.sections[i + 1], label);
    if (s0 && s1) {
        const double t = (x1 - g[i]) / (g[i + 1] - g[i]);
        return std::make_pair(s0->lo + t * (s1->lo - s0->lo), s0->hi + t * (s1->hi - s0->hi));
    }
    if (s0 && x1 == g[i]) return std::make_pair(s0->lo, s0->hi);
    if (s1 && x1 == g[i + 1]) return std::make_pair(s1->lo, s1->hi);
    return std::nullopt;
}

std::pair<double, int> NarrowGeometry::try_project(const Vec2& x) const {
    for (std::size_t k = 0; k < edge_label_.size(); ++k) {
        const auto s = section(static_cast<int>(k), x.x());
        if (s && x.y() >= s->first && x.y() <= s->second) return {x.x(), static_cast<int>(k)};
    }
    return {x.x(), -1};
}

std::pair<double, int> NarrowGeometry::project(const Vec2& x) const {
    const auto out = try_project(x);
    if (out.second < 0) throw GeometryError("point outside the narrow domain");
    return out;
}

// =============================================================================
// Wedge and vee projections
// =============================================================================

namespace {

/// Node i on edge k whose shell [mid_{i-1}, mid_i] contains z.
std::size_t shell_index(const Edge& e, double z) {
    const auto& g = e.grid;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), z) - g.begin());
    if (i == 0) return 0;
    if (i >= g.size()) return g.size() - 1;
    return (z - g[i - 1] < g[i] - z) ? i - 1 : i;
}

}  // namespace

GraphFunction wedge_project_samples(const Geometry& geo, const std::vector<Vec2>& points, const std::vector<double>& values,
                                    const std::vector<double>& areas, bool fill_empty) {
    if (points.size() != values.size() || points.size() != areas.size())
        throw GeometryError("sample arrays differ in length");
    const GraphPtr g = geo.graph();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g->num_nodes()));
    Eigen::VectorXd area = sum;
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto [z, k] = geo.try_project(points[p]);
        if (k < 0) continue;
        const Edge& e = g->edge(k);
        const std::size_t i = shell_index(e, z);
        if (e.unbounded() && i + 1 == e.grid.size() && z > e.grid.back()) continue;
        const int node = g->edge_nodes(k)[i];
        sum[node] += values[p] * areas[p];
        area[node] += areas[p];
    }
    GraphFunction f(g);
    std::vector<char> empty(g->num_nodes(), 0);
    for (Eigen::Index n = 0; n < sum.size(); ++n) {
        if (area[n] > 0.0) f.values[n] = sum[n] / area[n];
        else empty[static_cast<std::size_t>(n)] = 1;
    }
    for (const auto& e : g->edges()) {
        const auto& nodes = g->edge_nodes(e.id);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!empty[static_cast<std::size_t>(nodes[i])]) continue;
            if (!fill_empty) throw GeometryError("empty shell bin at edge " + std::to_string(e.id) + " node " + std::to_string(i));
            // nearest filled node along the edge
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                if (empty[static_cast<std::size_t>(nodes[q])]) continue;
                const double d = std::abs(e.grid[q] - e.grid[i]);
                if (d < best) {
                    best = d;
                    f.values[nodes[i]] = f.values[nodes[q]];
                }
            }
            if (!std::isfinite(best)) throw GeometryError("edge " + std::to_string(e.id) + " received no samples");
        }
    }
    return f;
}

GraphFunction wedge_project(const Geometry& geo, const std::function<double(const Vec2&)>& phi, const WedgeOptions& opts) {
    const Box b = geo.bounding_box();
    const int n = std::max(2, opts.resolution);
    const double dx = b.width() / n, dy = b.height() / n;
    std::vector<Vec2> pts;
    std::vector<double> vals, areas;
    pts.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 x(b.x0 + (i + 0.5) * dx, b.y0 + (j + 0.5) * dy);
            pts.push_back(x);
            vals.push_back(phi(x));
            areas.push_back(dx * dy);
        }
    return wedge_project_samples(geo, pts, vals, areas, opts.fill_empty);
}

double vee(const Geometry& geo, const GraphFunction& f, const Vec2& x) {
    const auto [z, k] = geo.project(x);
    return f.eval(z, k);
}

}  // namespace fwg
