#include "fwgraph/multiscale.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <queue>
#include <regex>

namespace fwg {

// =============================================================================
// Domains and fields
// =============================================================================

bool Domain2D::active(int i, int j) const {
    return i >= 0 && j >= 0 && i < nx && j < ny && mask[static_cast<std::size_t>(i + nx * j)];
}

int Domain2D::index(int i, int j) const { return active(i, j) ? unknown[static_cast<std::size_t>(i + nx * j)] : -1; }

Vec2 Domain2D::center_of(std::size_t u) const {
    const int c = cell_of[u];
    return {box.x0 + (c % nx + 0.5) * dx, box.y0 + (c / nx + 0.5) * dy};
}

namespace {

DomainPtr finish_domain(Domain2D d) {
    d.unknown.assign(d.mask.size(), -1);
    for (std::size_t c = 0; c < d.mask.size(); ++c)
        if (d.mask[c]) {
            d.unknown[c] = static_cast<int>(d.cell_of.size());
            d.cell_of.push_back(static_cast<int>(c));
        }
    if (d.cell_of.empty()) throw SolverError("domain mask is empty");
    // connectivity of the mask
    std::vector<char> seen(d.mask.size(), 0);
    std::queue<int> q;
    q.push(d.cell_of.front());
    seen[static_cast<std::size_t>(d.cell_of.front())] = 1;
    std::size_t count = 0;
    while (!q.empty()) {
        const int c = q.front();
        q.pop();
        ++count;
        const int i = c % d.nx, j = c / d.nx;
        const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& p : nb) {
            if (!d.active(p[0], p[1])) continue;
            const auto w = static_cast<std::size_t>(p[0] + d.nx * p[1]);
            if (!seen[w]) {
                seen[w] = 1;
                q.push(static_cast<int>(w));
            }
        }
    }
    if (count != d.cell_of.size()) throw SolverError("domain mask is not connected");
    return std::make_shared<const Domain2D>(std::move(d));
}

}  // namespace

DomainPtr narrow_domain_grid(const NarrowGeometry& geo, int nx, int ny) {
    Domain2D d;
    d.box = geo.bounding_box();
    d.nx = nx;
    d.ny = ny;
    d.dx = d.box.width() / nx;
    d.dy = d.box.height() / ny;
    d.mask.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Vec2 x(d.box.x0 + (i + 0.5) * d.dx, d.box.y0 + (j + 0.5) * d.dy);
            d.mask[static_cast<std::size_t>(i + nx * j)] = geo.try_project(x).second >= 0;
        }
    return finish_domain(std::move(d));
}

DomainPtr box_domain(const Box& box, int nx, int ny) {
    Domain2D d;
    d.box = box;
    d.nx = nx;
    d.ny = ny;
    d.dx = box.width() / nx;
    d.dy = box.height() / ny;
    d.mask.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 1);
    return finish_domain(std::move(d));
}

Field2D Field2D::from(DomainPtr d, const Field& f) {
    Field2D out;
    out.values.resize(static_cast<Eigen::Index>(d->size()));
    for (std::size_t u = 0; u < d->size(); ++u) out.values[static_cast<Eigen::Index>(u)] = f(d->center_of(u));
    out.domain = std::move(d);
    return out;
}

double Field2D::integral() const { return values.sum() * domain->cell_area(); }

double Field2D::norm_L2() const { return std::sqrt(values.squaredNorm() * domain->cell_area()); }

// =============================================================================
// Solvers
// =============================================================================

namespace {

Eigen::SparseMatrix<double> diffusion_matrix(const Domain2D& D, double cx, double cy) {
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](int a, int b, double c) {
        trip.emplace_back(a, a, c);
        trip.emplace_back(b, b, c);
        trip.emplace_back(a, b, -c);
        trip.emplace_back(b, a, -c);
    };
    for (int j = 0; j < D.ny; ++j)
        for (int i = 0; i < D.nx; ++i) {
            const int a = D.index(i, j);
            if (a < 0) continue;
            if (const int b = D.index(i + 1, j); b >= 0) add(a, b, cx);
            if (const int b = D.index(i, j + 1); b >= 0) add(a, b, cy);
        }
    const auto n = static_cast<Eigen::Index>(D.size());
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

Eigen::MatrixXd noise_matrix(const Domain2D& D, const NoiseBasis& noise) {
    Eigen::MatrixXd N(static_cast<Eigen::Index>(D.size()), static_cast<Eigen::Index>(noise.size()));
    for (std::size_t u = 0; u < D.size(); ++u) {
        const Vec2 x = D.center_of(u);
        for (std::size_t j = 0; j < noise.size(); ++j) N(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)) = noise.eval(j, x);
    }
    return N;
}

/// Implicit diffusion + explicit reaction/noise, with an optional explicit pre-step.
class FieldStepper {
public:
    FieldStepper(const Domain2D& D, const Eigen::SparseMatrix<double>& K, double dt, const ReactionSpec& r,
                 Eigen::MatrixXd noise)
        : m_(D.cell_area()), dt_(dt), r_(r), N_(std::move(noise)) {
        Eigen::SparseMatrix<double> I(K.rows(), K.cols());
        I.setIdentity();
        A_.compute(m_ * I + dt * K);
        if (A_.info() != Eigen::Success) throw SolverError("factorization of the 2-D system failed");
    }

    [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& u, const Eigen::VectorXd& coef) const {
        Eigen::VectorXd rhs(u.size());
        Eigen::VectorXd forcing;
        if (coef.size() > 0) forcing = N_ * coef;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            double s = u[i] + dt_ * r_.b(u[i]);
            if (coef.size() > 0) s += r_.g(u[i]) * forcing[i];
            rhs[i] = m_ * s;
        }
        Eigen::VectorXd out = A_.solve(rhs);
        if (!out.allFinite() || out.cwiseAbs().maxCoeff() > 1e12) throw SolverError("blow-up guard triggered in 2-D solve");
        return out;
    }

private:
    double m_;
    double dt_;
    const ReactionSpec& r_;
    Eigen::MatrixXd N_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> A_;
};

std::size_t count_steps(double T, double dt) {
    SpdeConfig c;
    c.T = T;
    c.dt = dt;
    return c.steps();
}

template <class Step>
FieldPath march(DomainPtr D, const Eigen::VectorXd& u0, std::size_t steps, std::size_t max_snapshots, double dt, Step&& step) {
    FieldPath p;
    p.domain = D;
    const std::size_t stride = std::max<std::size_t>(1, (steps + max_snapshots - 1) / std::max<std::size_t>(1, max_snapshots));
    Eigen::VectorXd u = u0;
    p.times.push_back(0.0);
    p.states.push_back(u);
    for (std::size_t n = 0; n < steps; ++n) {
        u = step(n, u);
        if ((n + 1) % stride == 0 || n + 1 == steps) {
            p.times.push_back(static_cast<double>(n + 1) * dt);
            p.states.push_back(u);
        }
    }
    return p;
}

Eigen::VectorXd step_coefficients(const WienerSample& w, double se, const Control* phi, std::size_t n, double dt, std::size_t J) {
    if (J == 0) return {};
    Eigen::VectorXd coef = se * w.dB.col(static_cast<Eigen::Index>(n));
    if (phi) coef += dt * phi->phi.row(static_cast<Eigen::Index>(n)).transpose();
    return coef;
}

}  // namespace

FieldPath solve_narrow(DomainPtr D, const MultiscaleConfig& cfg, const ReactionSpec& reaction, const NoiseBasis& noise,
                       const Field2D& u0, const Control* phi, std::uint64_t seed, std::uint64_t sample) {
    if (!(cfg.delta >= cfg.delta_min)) throw SolverError("delta below delta_min");
    if (u0.values.size() != static_cast<Eigen::Index>(D->size())) throw SolverError("initial field does not match the domain");
    const std::size_t steps = count_steps(cfg.T, cfg.dt);
    const std::size_t J = noise.size();
    if (phi && (phi->steps() != steps || phi->modes() != J)) throw SolverError("control grid mismatch");
    const auto K = diffusion_matrix(*D, 0.5 * D->dy / D->dx, 0.5 / (cfg.delta * cfg.delta) * D->dx / D->dy);
    const FieldStepper stepper(*D, K, cfg.dt, reaction, noise_matrix(*D, noise));
    const WienerSample w = sample_increments(J, steps, cfg.dt, seed, sample);
    const double se = std::sqrt(cfg.epsilon);
    const bool forced = J > 0 && (cfg.epsilon > 0.0 || phi);
    return march(D, u0.values, steps, cfg.max_snapshots, cfg.dt, [&](std::size_t n, const Eigen::VectorXd& u) {
        return stepper.step(u, forced ? step_coefficients(w, se, phi, n, cfg.dt, J) : Eigen::VectorXd());
    });
}

double advection_time_limit(const Hamiltonian& H, const Domain2D& D, double delta) {
    if (std::isinf(delta)) return std::numeric_limits<double>::infinity();
    double gmax = 0.0;
    for (int j = 0; j <= D.ny; ++j)
        for (int i = 0; i <= D.nx; ++i)
            gmax = std::max(gmax, H.gradient(Vec2(D.box.x0 + i * D.dx, D.box.y0 + j * D.dy)).norm());
    return gmax > 0.0 ? 0.5 * std::min(D.dx, D.dy) * delta / gmax : std::numeric_limits<double>::infinity();
}

FieldPath solve_fast_advection(const Hamiltonian& H, DomainPtr D, const MultiscaleConfig& cfg, const ReactionSpec& reaction,
                               const NoiseBasis& noise, const Field2D& u0, std::uint64_t seed, std::uint64_t sample) {
    if (!(cfg.delta >= cfg.delta_min)) throw SolverError("delta below delta_min");
    const double limit = advection_time_limit(H, *D, cfg.delta);
    if (cfg.dt > limit) throw SolverError("CFL violation: dt exceeds " + std::to_string(limit));
    const Domain2D& d = *D;
    const std::size_t steps = count_steps(cfg.T, cfg.dt);
    const std::size_t J = noise.size();
    const double inv = std::isinf(cfg.delta) ? 0.0 : 1.0 / cfg.delta;
    auto corner = [&](int i, int j) { return H.value(Vec2(d.box.x0 + i * d.dx, d.box.y0 + j * d.dy)); };

    // transport velocity w = -grad^perp H / delta on faces, from corner values of H
    std::vector<double> wx(static_cast<std::size_t>((d.nx + 1) * d.ny), 0.0), wy(static_cast<std::size_t>(d.nx * (d.ny + 1)), 0.0);
    for (int j = 0; j < d.ny; ++j)
        for (int i = 1; i < d.nx; ++i)
            wx[static_cast<std::size_t>(i + (d.nx + 1) * j)] = inv * (corner(i, j + 1) - corner(i, j)) / d.dy;
    for (int j = 1; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i)
            wy[static_cast<std::size_t>(i + d.nx * j)] = -inv * (corner(i + 1, j) - corner(i, j)) / d.dx;

    auto advect = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(u.size());
        auto val = [&](int i, int j) { return u[d.index(i, j)]; };
        auto face = [&](int up_i, int up_j, int far_i, int far_j) {
            const double a = val(up_i, up_j);
            return d.active(far_i, far_j) ? 1.5 * a - 0.5 * val(far_i, far_j) : a;
        };
        for (int j = 0; j < d.ny; ++j)
            for (int i = 1; i < d.nx; ++i) {
                const double w = wx[static_cast<std::size_t>(i + (d.nx + 1) * j)];
                if (w == 0.0) continue;
                const double uf = w > 0.0 ? face(i - 1, j, i - 2, j) : face(i, j, i + 1, j);
                const double flux = w * uf * d.dy;
                r[d.index(i - 1, j)] -= flux;
                r[d.index(i, j)] += flux;
            }
        for (int j = 1; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                const double w = wy[static_cast<std::size_t>(i + d.nx * j)];
                if (w == 0.0) continue;
                const double uf = w > 0.0 ? face(i, j - 1, i, j - 2) : face(i, j, i, j + 1);
                const double flux = w * uf * d.dx;
                r[d.index(i, j - 1)] -= flux;
                r[d.index(i, j)] += flux;
            }
        return Eigen::VectorXd(r / d.cell_area());
    };

    const auto K = diffusion_matrix(d, 0.5 * d.dy / d.dx, 0.5 * d.dx / d.dy);
    const FieldStepper stepper(d, K, cfg.dt, reaction, noise_matrix(d, noise));
    const WienerSample w = sample_increments(J, steps, cfg.dt, seed, sample);
    const double se = std::sqrt(cfg.epsilon);
    const bool forced = J > 0 && cfg.epsilon > 0.0;
    const double dt = cfg.dt;
    return march(D, u0.values, steps, cfg.max_snapshots, dt, [&](std::size_t n, const Eigen::VectorXd& u) {
        Eigen::VectorXd v = u;
        if (inv != 0.0) {
            const Eigen::VectorXd u1 = u + dt * advect(u);
            const Eigen::VectorXd u2 = 0.75 * u + 0.25 * (u1 + dt * advect(u1));
            v = u / 3.0 + (2.0 / 3.0) * (u2 + dt * advect(u2));
        }
        return stepper.step(v, forced ? step_coefficients(w, se, nullptr, n, dt, J) : Eigen::VectorXd());
    });
}

// =============================================================================
// Projections
// =============================================================================

namespace {

GraphFunction project_cells(const Geometry& geo, const Domain2D& D, const Eigen::VectorXd& values, bool fill_empty) {
    std::vector<Vec2> pts(D.size());
    std::vector<double> vals(D.size()), areas(D.size(), D.cell_area());
    for (std::size_t u = 0; u < D.size(); ++u) {
        pts[u] = D.center_of(u);
        vals[u] = values[static_cast<Eigen::Index>(u)];
    }
    return wedge_project_samples(geo, pts, vals, areas, fill_empty);
}

NoiseBasis project_noise_on_cells(const NoiseBasis& noise, const Geometry& geo, const Domain2D& D) {
    NoiseBasis b = noise;
    b.projected.clear();
    const Eigen::MatrixXd N = noise_matrix(D, noise);
    for (Eigen::Index j = 0; j < N.cols(); ++j) b.projected.push_back(project_cells(geo, D, N.col(j), true));
    return b;
}

}  // namespace

std::vector<GraphFunction> project_field(const FieldPath& path, const Geometry& geo, bool fill_empty) {
    std::vector<GraphFunction> out;
    for (const auto& s : path.states) out.push_back(project_cells(geo, *path.domain, s, fill_empty));
    return out;
}

Eigen::VectorXd vee_field(const Geometry& geo, const GraphFunction& f, const Domain2D& D) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(D.size()));
    for (std::size_t u = 0; u < D.size(); ++u) out[static_cast<Eigen::Index>(u)] = vee(geo, f, D.center_of(u));
    return out;
}

// =============================================================================
// Convergence audits
// =============================================================================

bool ConvergenceAudit::all_monotone() const {
    return !monotone.empty() && std::all_of(monotone.begin(), monotone.end(), [](bool b) { return b; });
}

namespace {

ConvergenceRow compare_paths(const NarrowGeometry& geo, const FieldPath& two_d, const PathResult& graph, double tau0) {
    ConvergenceRow row;
    const Domain2D& D = *two_d.domain;
    for (std::size_t s = 0; s < two_d.states.size(); ++s) {
        const GraphFunction f(graph.graph, graph.states[s]);
        const double err = std::sqrt((two_d.states[s] - vee_field(geo, f, D)).squaredNorm() * D.cell_area());
        if (s == 0) row.error_t0 = err;
        if (two_d.times[s] >= tau0 - 1e-12) row.error = std::max(row.error, err);
    }
    return row;
}

void mark_monotone(ConvergenceAudit& a, std::size_t trials, std::size_t ladder) {
    for (std::size_t t = 0; t < trials; ++t) {
        bool mono = true;
        for (std::size_t k = 1; k < ladder; ++k)
            if (!(a.rows[t * ladder + k].error < a.rows[t * ladder + k - 1].error)) mono = false;
        a.monotone.push_back(mono);
    }
}

}  // namespace

ConvergenceAudit narrow_limit_audit(const NarrowGeometry& geo, const std::vector<double>& delta_ladder, const Field& u0,
                                    const ReactionSpec& reaction, const NoiseBasis& noise, const Control* phi,
                                    double tau0, double T, double dt, int nx, int ny) {
    const DomainPtr D = narrow_domain_grid(geo, nx, ny);
    const Field2D f0 = Field2D::from(D, u0);
    const std::size_t steps = count_steps(T, dt);
    const NoiseBasis graph_noise = project_noise_on_cells(noise, geo, *D);
    const SpdeContext ctx(assemble(geo.graph(), geo.coefficients()), reaction, graph_noise, dt, 1.0);
    SpdeConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    cfg.u0 = project_cells(geo, *D, f0.values, true);
    cfg.max_snapshots = steps;
    const PathResult graph = phi ? solve_controlled(ctx, cfg, *phi, 0, 0) : solve_deterministic(ctx, cfg.u0, T, steps);
    ConvergenceAudit a;
    for (const double delta : delta_ladder) {
        MultiscaleConfig mc;
        mc.delta = delta;
        mc.dt = dt;
        mc.T = T;
        mc.max_snapshots = steps;
        mc.delta_min = 0.0;
        const FieldPath p = solve_narrow(D, mc, reaction, noise, f0, phi, 0, 0);
        ConvergenceRow row = compare_paths(geo, p, graph, tau0);
        row.delta = delta;
        a.rows.push_back(row);
    }
    mark_monotone(a, 1, delta_ladder.size());
    return a;
}

ConvergenceAudit semigroup_convergence_audit(const NarrowGeometry& geo, const std::vector<double>& delta_ladder,
                                             const std::vector<Field>& trials, double tau0, double T, double dt, int nx,
                                             int ny, const ReactionSpec& reaction) {
    ConvergenceAudit out;
    for (std::size_t t = 0; t < trials.size(); ++t) {
        const ConvergenceAudit a = narrow_limit_audit(geo, delta_ladder, trials[t], reaction, NoiseBasis{}, nullptr, tau0, T, dt, nx, ny);
        for (auto row : a.rows) {
            row.trial = t;
            out.rows.push_back(row);
        }
    }
    mark_monotone(out, trials.size(), delta_ladder.size());
    return out;
}

std::function<double(double)> parse_psi(const std::string& spec) {
    static const std::regex power(R"(\s*eps\^\s*([0-9.]+)(?:/([0-9.]+))?\s*)");
    std::smatch m;
    if (std::regex_match(spec, m, power)) {
        double p = std::stod(m[1].str());
        if (m[2].matched) p /= std::stod(m[2].str());
        if (!(p > 0.0)) throw SolverError("psi(eps) must vanish as eps -> 0");
        return [p](double eps) { return std::pow(eps, p); };
    }
    throw SolverError("psi(eps) must have the form eps^p with p > 0 so that it vanishes as eps -> 0; got '" + spec + "'");
}

JointLimitReport joint_limit_audit(const NarrowGeometry& geo, const std::function<double(double)>& psi_map,
                                   const std::vector<double>& eps_grid, const Field& observable, double r,
                                   const Field& u0, const ReactionSpec& reaction, const NoiseBasis& noise, double T,
                                   double dt, int nx, int ny, std::size_t N, std::uint64_t seed, unsigned workers) {
    const DomainPtr D = narrow_domain_grid(geo, nx, ny);
    const Field2D f0 = Field2D::from(D, u0);
    const Field2D obs = Field2D::from(D, observable);
    const NoiseBasis graph_noise = project_noise_on_cells(noise, geo, *D);
    const SpdeContext ctx(assemble(geo.graph(), geo.coefficients()), reaction, graph_noise, dt, 1.0);
    SpdeConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    cfg.u0 = project_cells(geo, *D, f0.values, true);
    RareEvent event;
    event.psi = project_cells(geo, *D, obs.values, true);
    event.r = r;
    const ProcessModel model = ProcessModel::make(ctx, cfg, Regime::LDP);

    JointLimitReport rep;
    for (const double eps : eps_grid) {
        JointLimitRow row;
        row.epsilon = eps;
        row.delta = psi_map(eps);
        MultiscaleConfig mc;
        mc.delta = row.delta;
        mc.epsilon = eps;
        mc.dt = dt;
        mc.T = T;
        mc.max_snapshots = 1;
        mc.delta_min = 0.0;
        std::vector<char> hit(N, 0);
        parallel_for(N, workers, [&](std::size_t i) {
            const FieldPath p = solve_narrow(D, mc, reaction, noise, f0, nullptr, seed, i);
            hit[i] = p.states.back().dot(obs.values) * D->cell_area() > r;
        });
        double hits = 0.0;
        for (char h : hit) hits += h;
        row.two_d.n = N;
        row.two_d.hits = static_cast<std::size_t>(hits);
        row.two_d.p = hits / static_cast<double>(N);
        row.two_d.se = std::sqrt(row.two_d.p * (1.0 - row.two_d.p) / static_cast<double>(N));
        row.two_d.zero_hits = hits == 0.0;
        row.graph = estimate_probability(event, model.at(eps), N, seed, workers);
        row.plateau_two_d = row.two_d.p > 0.0 ? -eps * std::log(row.two_d.p) : std::numeric_limits<double>::infinity();
        row.plateau_graph = row.graph.p > 0.0 ? -eps * std::log(row.graph.p) : std::numeric_limits<double>::infinity();
        rep.rows.push_back(row);
    }
    const auto& last = *std::min_element(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
    if (last.two_d.p > 0.0 && last.graph.p > 0.0) {
        const double s1 = last.epsilon * last.two_d.se / last.two_d.p;
        const double s2 = last.epsilon * last.graph.se / last.graph.p;
        rep.agree_at_smallest = std::abs(last.plateau_two_d - last.plateau_graph) <= 3.0 * std::hypot(s1, s2) + 1e-12;
    }
    return rep;
}

}  // namespace fwg
