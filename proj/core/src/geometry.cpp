#include "fwgraph/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace fwg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

std::string fmt_point(const Vec2& x) {
    std::ostringstream os;
    os << "(" << x.x() << ", " << x.y() << ")";
    return os.str();
}

}  // namespace

// =============================================================================
// Hamiltonian registry
// =============================================================================

Hamiltonian make_hamiltonian(const std::string& name, const std::map<std::string, double>& params) {
    Hamiltonian H;
    H.name = name;
    if (name == "radial") {
        const double a = param(params, "scale", 1.0);
        const double half = param(params, "box", 4.0);
        H.value = [a](const Vec2& x) { return a * x.squaredNorm(); };
        H.gradient = [a](const Vec2& x) -> Vec2 { return 2.0 * a * x; };
        H.hessian = [a](const Vec2&) -> Mat2 { return 2.0 * a * Mat2::Identity(); };
        H.box = {-half, half, -half, half};
        H.growth = std::array<double, 3>{2.0 * a, 2.0 * a, 0.0};
    } else if (name == "example2") {
        const double half = param(params, "box", 4.0);
        H.value = [](const Vec2& x) {
            const double r2 = x.squaredNorm();
            return r2 + std::sqrt(1.0 + r2) - 1.0;
        };
        H.gradient = [](const Vec2& x) -> Vec2 { return x * (2.0 + 1.0 / std::sqrt(1.0 + x.squaredNorm())); };
        H.hessian = [](const Vec2& x) -> Mat2 {
            const double s = std::sqrt(1.0 + x.squaredNorm());
            return (2.0 + 1.0 / s) * Mat2::Identity() - x * x.transpose() / (s * s * s);
        };
        H.box = {-half, half, -half, half};
    } else if (name == "double_well") {
        const double tilt = param(params, "tilt", 0.2);
        const double half = param(params, "box", 2.5);
        // global minimum of (x^2-1)^2 + tilt*x, on the side opposite to the tilt
        double xm = tilt >= 0.0 ? -1.0 : 1.0;
        for (int it = 0; it < 100; ++it) {
            const double d = 4.0 * xm * (xm * xm - 1.0) + tilt;
            const double dd = 12.0 * xm * xm - 4.0;
            xm -= d / dd;
        }
        const double c0 = -((xm * xm - 1.0) * (xm * xm - 1.0) + tilt * xm);
        H.value = [tilt, c0](const Vec2& x) {
            const double q = x.x() * x.x() - 1.0;
            return q * q + tilt * x.x() + c0 + x.y() * x.y();
        };
        H.gradient = [tilt](const Vec2& x) -> Vec2 {
            return Vec2(4.0 * x.x() * (x.x() * x.x() - 1.0) + tilt, 2.0 * x.y());
        };
        H.hessian = [](const Vec2& x) -> Mat2 {
            Mat2 m;
            m << 12.0 * x.x() * x.x() - 4.0, 0.0, 0.0, 2.0;
            return m;
        };
        H.box = {-half, half, -half, half};
    } else {
        throw GeometryError("unknown Hamiltonian '" + name + "'");
    }
    return H;
}

std::vector<std::string> hamiltonian_names() { return {"radial", "example2", "double_well"}; }

// =============================================================================
// Critical points
// =============================================================================

std::vector<CriticalPoint> find_critical_points(const Hamiltonian& H, const CriticalPointOptions& opts) {
    const Box& b = H.box;
    const double scale = std::max(b.width(), b.height());
    std::vector<CriticalPoint> found;
    const int n = std::max(2, opts.seeds_per_axis);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            Vec2 x(b.x0 + b.width() * (i + 0.5) / n, b.y0 + b.height() * (j + 0.5) / n);
            bool converged = false;
            for (int it = 0; it < opts.max_newton; ++it) {
                const Vec2 g = H.gradient(x);
                if (g.norm() < 1e-13 * (1.0 + scale)) {
                    converged = true;
                    break;
                }
                const Mat2 hs = H.hessian(x);
                if (std::abs(hs.determinant()) < 1e-300) break;
                Vec2 dx = hs.partialPivLu().solve(g);
                if (dx.norm() > 0.25 * scale) dx *= 0.25 * scale / dx.norm();
                x -= dx;
                if (!std::isfinite(x.x()) || !std::isfinite(x.y())) break;
            }
            if (!converged) {
                const Vec2 g = H.gradient(x);
                converged = std::isfinite(g.norm()) && g.norm() < 1e-10 * (1.0 + scale);
            }
            if (!converged || !b.contains(x)) continue;
            const bool dup = std::any_of(found.begin(), found.end(),
                                         [&](const CriticalPoint& c) { return (c.x - x).norm() < opts.dedup_tol; });
            if (dup) continue;
            const Mat2 hs = H.hessian(x);
            CriticalPoint cp;
            cp.x = x;
            cp.level = H.value(x);
            cp.det = hs.determinant();
            cp.margin = std::abs(cp.det) / (1.0 + hs.squaredNorm());
            if (cp.margin <= opts.nondegeneracy_tol)
                throw GeometryError("non-degeneracy violated: degenerate critical point at " + fmt_point(x));
            cp.kind = cp.det < 0.0 ? VertexKind::Saddle : (hs.trace() > 0.0 ? VertexKind::Minimum : VertexKind::Maximum);
            found.push_back(cp);
        }
    }
    std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) { return a.level < b.level; });
    return found;
}

// =============================================================================
// Contour tracing
// =============================================================================

double LevelContour::length() const { return std::accumulate(dl.begin(), dl.end(), 0.0); }

LevelContour trace_contour(const Hamiltonian& H, double z, const Vec2& seed, const ContourOptions& opts) {
    auto grad_norm = [&](const Vec2& x) { return H.gradient(x).norm(); };
    auto to_level = [&](Vec2 x) {
        for (int it = 0; it < 20; ++it) {
            const Vec2 g = H.gradient(x);
            const double gg = g.squaredNorm();
            if (gg < opts.grad_tol * opts.grad_tol) throw GeometryError("near-critical contour at level " + std::to_string(z));
            const Vec2 dx = (H.value(x) - z) * g / gg;
            x -= dx;
            if (dx.norm() < 1e-15 * (1.0 + x.norm())) break;
        }
        return x;
    };
    auto tangent = [&](const Vec2& x) -> Vec2 {
        const Vec2 g = H.gradient(x);
        const double n = g.norm();
        if (!(n >= opts.grad_tol)) throw GeometryError("near-critical contour at level " + std::to_string(z));
        return Vec2(-g.y(), g.x()) / n;
    };
    auto rk4 = [&](const Vec2& x, double h) {
        const Vec2 k1 = tangent(x);
        const Vec2 k2 = tangent(x + 0.5 * h * k1);
        const Vec2 k3 = tangent(x + 0.5 * h * k2);
        const Vec2 k4 = tangent(x + h * k3);
        return to_level(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    };
    auto step_size = [&](const Vec2& x) {
        const Vec2 g = H.gradient(x);
        const Mat2 hs = H.hessian(x);
        const double gn = g.norm();
        const double num = std::abs(hs(0, 0) * g.y() * g.y() - 2.0 * hs(0, 1) * g.x() * g.y() + hs(1, 1) * g.x() * g.x());
        const double kappa = num / (gn * gn * gn);
        double h = kappa > 0.0 ? std::sqrt(8.0 * opts.chord_tol / kappa) : opts.h_max;
        return std::clamp(h, opts.h_min, opts.h_max);
    };

    LevelContour c;
    c.level = z;
    const Vec2 x0 = to_level(seed);
    const Vec2 t0 = tangent(x0);
    c.points.push_back(x0);
    Vec2 x = x0;
    double travelled = 0.0;
    double min_grad = grad_norm(x0);
    for (std::size_t step = 0; step < opts.max_steps; ++step) {
        const double h = step_size(x);
        Vec2 xm = rk4(x, 0.5 * h);
        Vec2 x1 = rk4(xm, 0.5 * h);
        const double d0 = (x - x0).dot(t0);
        const double d1 = (x1 - x0).dot(t0);
        const bool closing = travelled > 4.0 * h && d0 < 0.0 && d1 >= 0.0 && (x1 - x0).norm() < 2.0 * h;
        double hs = h;
        if (closing) {
            hs = (x0 - x).norm();
            xm = rk4(x, 0.5 * hs);
            x1 = x0;
        }
        const std::array<double, 3> gs{grad_norm(x), grad_norm(xm), grad_norm(x1)};
        min_grad = std::min({min_grad, gs[1], gs[2]});
        c.dl.push_back(hs);
        c.grad.push_back(gs);
        c.points.push_back(x1);
        travelled += hs;
        x = x1;
        if (closing) {
            c.min_grad = min_grad;
            return c;
        }
    }
    throw GeometryError("open contour after max steps at level " + std::to_string(z));
}

ContourCoefficients compute_coefficients(const LevelContour& contour, double grad_tol) {
    ContourCoefficients out;
    for (std::size_t s = 0; s < contour.dl.size(); ++s) {
        const auto& g = contour.grad[s];
        if (std::min({g[0], g[1], g[2]}) <= grad_tol) throw GeometryError("contour too close to critical point");
        out.alpha += contour.dl[s] / 6.0 * (g[0] + 4.0 * g[1] + g[2]);
        out.T += contour.dl[s] / 6.0 * (1.0 / g[0] + 4.0 / g[1] + 1.0 / g[2]);
    }
    return out;
}

// =============================================================================
// Reeb graph
// =============================================================================

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

int gap_of(const std::vector<double>& levels, double z) {
    const auto it = std::upper_bound(levels.begin(), levels.end(), z);
    return std::max(0, static_cast<int>(it - levels.begin()) - 1);
}

}  // namespace

ReebGeometry build_reeb_graph(const Hamiltonian& H, std::vector<CriticalPoint> cps, double z_max, const ReebOptions& opts) {
    if (cps.empty()) throw GeometryError("no critical points");
    std::sort(cps.begin(), cps.end(), [](const CriticalPoint& a, const CriticalPoint& b) { return a.level < b.level; });
    for (std::size_t i = 1; i < cps.size(); ++i)
        if (cps[i].level - cps[i - 1].level < 1e-9)
            throw GeometryError("distinct-levels condition violated: critical points share a level");
    if (std::abs(cps.front().level) > 1e-6) throw GeometryError("Hamiltonian minimum is not normalized to 0");
    if (cps.front().kind != VertexKind::Minimum) throw GeometryError("lowest critical point is not a minimum");
    if (!(z_max > cps.back().level)) throw GeometryError("Z_max must exceed the top critical level");

    const int m = static_cast<int>(cps.size());
    std::vector<double> levels(cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i) levels[i] = cps[i].level;

    const Box& box = H.box;
    const int nx = std::max(16, opts.label_resolution);
    const int ny = nx;
    const double dx = box.width() / (nx - 1), dy = box.height() / (ny - 1);
    const std::size_t nn = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    auto idx = [nx](int i, int j) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); };
    auto node_point = [&](int i, int j) { return Vec2(box.x0 + i * dx, box.y0 + j * dy); };

    std::vector<double> hv(nn);
    std::vector<int> gap(nn);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            hv[idx(i, j)] = H.value(node_point(i, j));
            gap[idx(i, j)] = gap_of(levels, hv[idx(i, j)]);
        }

    // grid samples straddle the true saddle value, so bands would leak across it
    std::vector<char> barrier(nn, 0);
    const int br = std::max(1, opts.attach_radius - 1);
    for (const auto& cp : cps) {
        if (cp.kind != VertexKind::Saddle) continue;
        const int ci = static_cast<int>(std::lround((cp.x.x() - box.x0) / dx));
        const int cj = static_cast<int>(std::lround((cp.x.y() - box.y0) / dy));
        for (int j = std::max(0, cj - br); j <= std::min(ny - 1, cj + br); ++j)
            for (int i = std::max(0, ci - br); i <= std::min(nx - 1, ci + br); ++i) barrier[idx(i, j)] = 1;
    }

    // connected components of every level band
    std::vector<int> comp(nn, -1);
    std::vector<int> comp_gap;
    std::vector<std::size_t> comp_size;
    std::vector<char> comp_boundary;
    for (std::size_t start = 0; start < nn; ++start) {
        if (comp[start] >= 0 || barrier[start]) continue;
        const int id = static_cast<int>(comp_gap.size());
        comp_gap.push_back(gap[start]);
        comp_size.push_back(0);
        comp_boundary.push_back(0);
        std::queue<std::size_t> q;
        q.push(start);
        comp[start] = id;
        while (!q.empty()) {
            const std::size_t p = q.front();
            q.pop();
            ++comp_size.back();
            const int i = static_cast<int>(p % static_cast<std::size_t>(nx));
            const int j = static_cast<int>(p / static_cast<std::size_t>(nx));
            if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) comp_boundary.back() = 1;
            const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
            for (const auto& ij : nb) {
                if (ij[0] < 0 || ij[1] < 0 || ij[0] >= nx || ij[1] >= ny) continue;
                const std::size_t w = idx(ij[0], ij[1]);
                if (comp[w] < 0 && !barrier[w] && gap[w] == gap[start]) {
                    comp[w] = id;
                    q.push(w);
                }
            }
        }
    }
    const std::size_t nc = comp_gap.size();

    // attach band components to the critical point they touch
    std::vector<int> upper_vertex(nc, -1), lower_vertex(nc, -1);
    for (int v = 0; v < m; ++v) {
        const Vec2& x = cps[static_cast<std::size_t>(v)].x;
        if (!box.contains(x)) throw GeometryError("critical point outside the search box");
        const int ci = static_cast<int>(std::lround((x.x() - box.x0) / dx));
        const int cj = static_cast<int>(std::lround((x.y() - box.y0) / dy));
        const int r = std::max(1, opts.attach_radius);
        for (int j = cj - r; j <= cj + r; ++j)
            for (int i = ci - r; i <= ci + r; ++i) {
                if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
                const int c = comp[idx(i, j)];
                if (c < 0) continue;
                if (comp_gap[static_cast<std::size_t>(c)] == v - 1) upper_vertex[static_cast<std::size_t>(c)] = v;
                if (comp_gap[static_cast<std::size_t>(c)] == v) lower_vertex[static_cast<std::size_t>(c)] = v;
            }
    }

    // adjacency across each critical level
    std::set<std::pair<int, int>> across;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t p = idx(i, j);
            for (const std::size_t w : {i + 1 < nx ? idx(i + 1, j) : p, j + 1 < ny ? idx(i, j + 1) : p}) {
                if (w == p || barrier[p] || barrier[w]) continue;
                const int gp = gap[p], gw = gap[w];
                if (gw == gp + 1) across.insert({comp[p], comp[w]});
                if (gp == gw + 1) across.insert({comp[w], comp[p]});
            }
        }
    std::vector<std::vector<int>> up_nb(nc), down_nb(nc);
    for (const auto& [lo, hi] : across) {
        up_nb[static_cast<std::size_t>(lo)].push_back(hi);
        down_nb[static_cast<std::size_t>(hi)].push_back(lo);
    }

    UnionFind uf(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const int g = comp_gap[c];
        if (g == m - 1 || upper_vertex[c] >= 0) continue;
        std::vector<int> free_up;
        for (int u : up_nb[c])
            if (lower_vertex[static_cast<std::size_t>(u)] < 0) free_up.push_back(u);
        if (free_up.size() == 1 && down_nb[static_cast<std::size_t>(free_up[0])].size() == 1) {
            uf.unite(static_cast<int>(c), free_up[0]);
        } else if (free_up.empty() && !up_nb[c].empty()) {
            upper_vertex[c] = g + 1;
        } else if (!comp_boundary[c]) {
            throw GeometryError("missed critical point between levels " + std::to_string(levels[static_cast<std::size_t>(g)]) +
                                " and " + std::to_string(levels[static_cast<std::size_t>(g + 1)]));
        }
    }
    for (std::size_t c = 0; c < nc; ++c) {
        const int g = comp_gap[c];
        if (g == 0 || lower_vertex[c] >= 0) continue;
        bool continued = false;
        for (int d : down_nb[c])
            if (uf.find(d) == uf.find(static_cast<int>(c))) continued = true;
        if (continued) continue;
        if (!down_nb[c].empty()) lower_vertex[c] = g;
        else if (!comp_boundary[c]) throw GeometryError("missed critical point: component appears without a vertex");
    }

    // chains of band components become edges
    struct Chain {
        int lo_comp = -1, hi_comp = -1;
        int v_lo = -1, v_hi = -1;
        std::vector<int> comps;
    };
    std::map<int, Chain> chains;
    for (std::size_t c = 0; c < nc; ++c) {
        if (comp_size[c] < 2 && upper_vertex[c] < 0 && lower_vertex[c] < 0) continue;
        Chain& ch = chains[uf.find(static_cast<int>(c))];
        ch.comps.push_back(static_cast<int>(c));
        if (ch.lo_comp < 0 || comp_gap[c] < comp_gap[static_cast<std::size_t>(ch.lo_comp)]) ch.lo_comp = static_cast<int>(c);
        if (ch.hi_comp < 0 || comp_gap[c] > comp_gap[static_cast<std::size_t>(ch.hi_comp)]) ch.hi_comp = static_cast<int>(c);
    }
    std::vector<Chain> edges_found;
    int unbounded = 0;
    for (auto& [root, ch] : chains) {
        ch.v_lo = lower_vertex[static_cast<std::size_t>(ch.lo_comp)];
        ch.v_hi = upper_vertex[static_cast<std::size_t>(ch.hi_comp)];
        if (ch.v_hi < 0 && comp_gap[static_cast<std::size_t>(ch.hi_comp)] == m - 1) {
            ch.v_hi = m;
            ++unbounded;
        }
        if (ch.v_lo < 0 || ch.v_hi < 0) {
            // fragments cut by the search box with no vertex are discarded
            if (comp_boundary[static_cast<std::size_t>(ch.lo_comp)] || comp_boundary[static_cast<std::size_t>(ch.hi_comp)]) continue;
            throw GeometryError("missed critical point: edge without an endpoint");
        }
        edges_found.push_back(ch);
    }
    if (unbounded != 1) throw GeometryError("expected exactly one unbounded level-set component, found " + std::to_string(unbounded));

    // seeds: a well-separated node in the middle of each edge's level range
    struct Seed {
        Vec2 x;
        double z;
    };
    std::vector<Seed> seeds(edges_found.size());
    for (std::size_t e = 0; e < edges_found.size(); ++e) {
        const Chain& ch = edges_found[e];
        std::set<int> members(ch.comps.begin(), ch.comps.end());
        const double a = levels[static_cast<std::size_t>(ch.v_lo)];
        double top = ch.v_hi < m ? levels[static_cast<std::size_t>(ch.v_hi)] : -kInf;
        if (ch.v_hi == m) {
            // highest level whose contour stays inside the labeling box
            top = z_max;
            for (int i = 0; i < nx; ++i) top = std::min({top, hv[idx(i, 0)], hv[idx(i, ny - 1)]});
            for (int j = 0; j < ny; ++j) top = std::min({top, hv[idx(0, j)], hv[idx(nx - 1, j)]});
            if (!(top > a)) throw GeometryError("labeling box too small for the unbounded edge");
        }
        const double zlo = a + 0.3 * (top - a), zhi = a + 0.7 * (top - a);
        double best = -1.0;
        for (std::size_t p = 0; p < nn; ++p) {
            if (!members.count(comp[p]) || hv[p] < zlo || hv[p] > zhi) continue;
            const int i = static_cast<int>(p % static_cast<std::size_t>(nx));
            const int j = static_cast<int>(p / static_cast<std::size_t>(nx));
            const Vec2 x = node_point(i, j);
            const double gn = H.gradient(x).norm();
            if (gn > best) {
                best = gn;
                seeds[e] = {x, hv[p]};
            }
        }
        if (best < 0.0) throw GeometryError("labeling grid too coarse to seed an edge");
    }

    // edge order: by lower level, then seed abscissa
    std::vector<std::size_t> order(edges_found.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
        const double lp = levels[static_cast<std::size_t>(edges_found[p].v_lo)];
        const double lq = levels[static_cast<std::size_t>(edges_found[q].v_lo)];
        if (lp != lq) return lp < lq;
        return seeds[p].x.x() < seeds[q].x.x();
    });

    std::vector<Vertex> vertices;
    for (int v = 0; v < m; ++v) vertices.push_back({v, cps[static_cast<std::size_t>(v)].kind, levels[static_cast<std::size_t>(v)], {}});
    vertices.push_back({m, VertexKind::Infinity, kInf, {}});
    std::vector<Edge> edges;
    ReebGeometry geo;
    std::vector<int> comp_edge(nc, -1);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Chain& ch = edges_found[order[k]];
        Edge e;
        e.id = static_cast<int>(k);
        e.v_lo = ch.v_lo;
        e.v_hi = ch.v_hi;
        e.a = levels[static_cast<std::size_t>(ch.v_lo)];
        e.b = ch.v_hi == m ? kInf : levels[static_cast<std::size_t>(ch.v_hi)];
        const double top = ch.v_hi == m ? z_max : e.b;
        e.grid = graded_grid(e.a, top, opts.cells, opts.grading, true, ch.v_hi != m);
        edges.push_back(std::move(e));
        for (int c : ch.comps) comp_edge[static_cast<std::size_t>(c)] = static_cast<int>(k);
        geo.seeds_.push_back(seeds[order[k]].x);
        geo.seed_levels_.push_back(seeds[order[k]].z);
    }

    geo.H_ = H;
    geo.cps_ = std::move(cps);
    geo.graph_ = std::make_shared<MetricGraph>(std::move(vertices), std::move(edges));
    geo.z_max_ = z_max;
    geo.nx_ = nx;
    geo.ny_ = ny;
    geo.search_radius_ = br + 1;
    geo.levels_ = levels;
    geo.labels_.resize(nn);
    for (std::size_t p = 0; p < nn; ++p) geo.labels_[p] = comp[p] < 0 ? -1 : comp_edge[static_cast<std::size_t>(comp[p])];
    const auto report = validate_graph(*geo.graph_);
    if (!report.valid()) throw GeometryError("Reeb graph invalid: " + report.violations.front());
    return geo;
}

const EdgeCoefficientTable& ReebGeometry::coefficients() const {
    if (!has_coeffs_) throw GeometryError("coefficients not computed; call hamiltonian_coefficients");
    return coeffs_;
}

std::pair<double, int> ReebGeometry::try_project(const Vec2& x) const {
    const double z = H_.value(x);
    const Box& box = H_.box;
    if (!box.contains(x)) {
        if (z > levels_.back()) return {z, graph_->unbounded_edge()};
        return {z, -1};
    }
    const int g = gap_of(levels_, z);
    const double dx = box.width() / (nx_ - 1), dy = box.height() / (ny_ - 1);
    const int ci = static_cast<int>(std::lround((x.x() - box.x0) / dx));
    const int cj = static_cast<int>(std::lround((x.y() - box.y0) / dy));
    for (int r = 0; r <= search_radius_; ++r)
        for (int j = cj - r; j <= cj + r; ++j)
            for (int i = ci - r; i <= ci + r; ++i) {
                if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
                const int k = label_at_node(i, j);
                if (k < 0) continue;
                const Edge& e = graph_->edge(k);
                if (z >= e.a && z <= e.b) {
                    const double node_z = H_.value(Vec2(box.x0 + i * dx, box.y0 + j * dy));
                    if (gap_of(levels_, node_z) == g) return {z, k};
                }
            }
    return {z, -1};
}

std::pair<double, int> ReebGeometry::project(const Vec2& x) const {
    auto out = try_project(x);
    if (out.second < 0) throw GeometryError("point " + fmt_point(x) + " outside labeled region");
    return out;
}

Vec2 ReebGeometry::seed_at_level(int k, double z) const {
    const Edge& e = graph_->edge(k);
    if (!(z > e.a && z < e.b)) throw GeometryError("level outside edge interval");
    const double scale = std::max(H_.box.width(), H_.box.height());
    Vec2 x = seeds_.at(static_cast<std::size_t>(k));
    double cur = H_.value(x);
    auto rhs = [&](const Vec2& p) -> Vec2 {
        const Vec2 g = H_.gradient(p);
        return g / g.squaredNorm();
    };
    for (int it = 0; it < 200000 && std::abs(z - cur) > 1e-13 * (1.0 + std::abs(z)); ++it) {
        const double gn = H_.gradient(x).norm();
        const double dz = z - cur;
        const double h = std::copysign(std::min(std::abs(dz), 0.01 * gn * scale), dz);
        const Vec2 k1 = rhs(x);
        const Vec2 k2 = rhs(x + 0.5 * h * k1);
        const Vec2 k3 = rhs(x + 0.5 * h * k2);
        const Vec2 k4 = rhs(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        cur = H_.value(x);
    }
    return x;
}

// =============================================================================
// Coefficient tables
// =============================================================================

namespace {

struct Sample {
    double z;
    double alpha;
    double T;
};

Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    return A.colPivHouseholderQr().solve(y);
}

}  // namespace

EdgeCoefficientTable hamiltonian_coefficients(const ReebGeometry& geo, const ContourOptions& opts) {
    const MetricGraph& g = *geo.graph();
    const Hamiltonian& H = geo.hamiltonian();
    EdgeCoefficientTable table;
    table.edges.resize(g.edges().size());
    constexpr std::size_t kFit = 6;

    for (const auto& e : g.edges()) {
        const std::size_t n = e.grid.size();
        // samples: node i at 2i, midpoint i at 2i+1
        std::vector<double> zs(2 * n - 1);
        for (std::size_t i = 0; i < n; ++i) zs[2 * i] = e.grid[i];
        for (std::size_t i = 0; i + 1 < n; ++i) zs[2 * i + 1] = 0.5 * (e.grid[i] + e.grid[i + 1]);
        std::vector<double> alpha(zs.size(), 0.0), T(zs.size(), 0.0);
        std::vector<char> traced(zs.size(), 0);
        const bool lo_vertex = true;
        const bool hi_vertex = !e.unbounded();
        for (std::size_t s = 0; s < zs.size(); ++s) {
            if ((s == 0 && lo_vertex) || (s + 1 == zs.size() && hi_vertex)) continue;
            try {
                double z = zs[s];
                Vec2 seed = e.unbounded() && s + 1 == zs.size() ? geo.seed_at_level(e.id, std::nextafter(z, 0.0)) : geo.seed_at_level(e.id, z);
                const auto c = compute_coefficients(trace_contour(H, z, seed, opts), opts.grad_tol * 0.5);
                alpha[s] = c.alpha;
                T[s] = c.T;
                traced[s] = 1;
            } catch (const GeometryError&) {
                traced[s] = 0;
            }
        }

        auto fill_end = [&](bool at_lo) {
            const int vid = at_lo ? e.v_lo : e.v_hi;
            const Vertex& v = g.vertex(vid);
            const double zv = v.level;
            std::vector<Sample> near;
            for (std::size_t q = 0; q < zs.size() && near.size() < kFit; ++q) {
                const std::size_t s = at_lo ? q : zs.size() - 1 - q;
                if (traced[s]) near.push_back({std::abs(zs[s] - zv), alpha[s], T[s]});
            }
            if (near.size() < 3) throw GeometryError("too few traced contours near vertex " + std::to_string(vid));
            const auto rows = static_cast<Eigen::Index>(near.size());
            Eigen::MatrixXd A(rows, 2), B(rows, 2);
            Eigen::VectorXd ya(rows), yt(rows);
            const bool saddle = v.kind == VertexKind::Saddle;
            for (Eigen::Index r = 0; r < rows; ++r) {
                const double sd = near[static_cast<std::size_t>(r)].z;
                if (saddle) {
                    A(r, 0) = 1.0;
                    A(r, 1) = sd;
                    B(r, 0) = -std::log(sd);
                    B(r, 1) = 1.0;
                } else {
                    A(r, 0) = sd;
                    A(r, 1) = sd * sd;
                    B(r, 0) = 1.0;
                    B(r, 1) = sd;
                }
                ya[r] = near[static_cast<std::size_t>(r)].alpha;
                yt[r] = near[static_cast<std::size_t>(r)].T;
            }
            const Eigen::VectorXd ca = least_squares(A, ya), ct = least_squares(B, yt);
            const double limit = near.back().z;
            for (std::size_t s = 0; s < zs.size(); ++s) {
                if (traced[s]) continue;
                const double sd = std::abs(zs[s] - zv);
                const bool mine = at_lo ? (zs[s] - e.grid.front() <= (e.grid.back() - e.grid.front()) / 2.0)
                                        : (zs[s] - e.grid.front() > (e.grid.back() - e.grid.front()) / 2.0);
                if (!mine) continue;
                if (sd > limit) throw GeometryError("untraceable contour away from vertex on edge " + std::to_string(e.id));
                if (saddle) {
                    alpha[s] = ca[0] + ca[1] * sd;
                    T[s] = sd > 0.0 ? ct[0] * -std::log(sd) + ct[1] : kInf;
                } else {
                    alpha[s] = ca[0] * sd + ca[1] * sd * sd;
                    T[s] = ct[0] + ct[1] * sd;
                }
                traced[s] = 2;
            }
        };
        fill_end(true);
        if (hi_vertex) fill_end(false);

        auto& c = table.edges[static_cast<std::size_t>(e.id)];
        for (std::size_t i = 0; i < n; ++i) {
            c.alpha.push_back(alpha[2 * i]);
            c.T.push_back(T[2 * i]);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            c.alpha_mid.push_back(alpha[2 * i + 1]);
            c.T_mid.push_back(T[2 * i + 1]);
        }
    }
    return table;
}

AsymptoticFit coefficient_asymptotics_check(const MetricGraph& g, const EdgeCoefficientTable& coeffs, int vertex,
                                            std::size_t samples) {
    const Vertex& v = g.vertex(vertex);
    if (v.incident.empty()) throw GraphError("vertex has no incident edge");
    const Edge& e = g.edge(v.incident.front().edge);
    const auto& c = coeffs.edges.at(static_cast<std::size_t>(e.id));
    const bool at_lo = e.v_lo == vertex;
    AsymptoticFit fit;
    fit.vertex_kind = to_string(v.kind);

    std::vector<Sample> near;
    const std::size_t n = e.grid.size();
    for (std::size_t q = 0; q < n && near.size() < samples; ++q) {
        const std::size_t i = at_lo ? q : n - 1 - q;
        if (v.kind != VertexKind::Infinity && q == 0) continue;
        if (!std::isfinite(c.T[i]) || !std::isfinite(c.alpha[i])) continue;
        near.push_back({e.grid[i], c.alpha[i], c.T[i]});
    }
    fit.samples = near.size();
    if (near.size() < 3) return fit;
    const auto rows = static_cast<Eigen::Index>(near.size());
    Eigen::VectorXd ya(rows), yt(rows);
    Eigen::MatrixXd A(rows, 1), B;
    const bool saddle = v.kind == VertexKind::Saddle;
    B.resize(rows, saddle ? 2 : 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& s = near[static_cast<std::size_t>(r)];
        const double sd = std::abs(s.z - v.level);
        if (v.kind == VertexKind::Infinity) A(r, 0) = s.z;
        else if (saddle) A(r, 0) = 1.0;
        else A(r, 0) = sd;
        if (saddle) {
            B(r, 0) = -std::log(sd);
            B(r, 1) = 1.0;
        } else {
            B(r, 0) = 1.0;
        }
        ya[r] = s.alpha;
        yt[r] = s.T;
    }
    const Eigen::VectorXd ca = least_squares(A, ya), ct = least_squares(B, yt);
    fit.alpha_coef = ca[0];
    fit.alpha_rel_residual = (A * ca - ya).norm() / std::max(ya.norm(), 1e-300);
    if (saddle) {
        fit.T_c1 = ct[0];
        fit.T_c2 = ct[1];
    } else {
        fit.T_c2 = ct[0];
    }
    const Eigen::VectorXd rt = B * ct - yt;
    fit.T_rel_residual = rt.norm() / std::max(yt.norm(), 1e-300);
    const double mean = yt.mean();
    const double ss_tot = (yt.array() - mean).square().sum();
    fit.T_r2 = ss_tot > 0.0 ? 1.0 - rt.squaredNorm() / ss_tot : 1.0;
    return fit;
}

}  // namespace fwg
