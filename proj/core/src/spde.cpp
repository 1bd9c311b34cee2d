#include "fwgraph/spde.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace fwg {

// =============================================================================
// Reactions
// =============================================================================

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

}  // namespace

ReactionSpec make_reaction(const std::string& name, const std::map<std::string, double>& params) {
    ReactionSpec r;
    r.name = name;
    const auto one = [](double) { return 1.0; };
    const auto zero = [](double) { return 0.0; };
    if (name == "zero") {
        r.b = zero;
        r.db = zero;
        r.g = one;
        r.dg = zero;
        r.linear_b = true;
        r.constant_g = true;
    } else if (name == "linear" || name == "damped") {
        const double c = name == "damped" ? -1.0 : param(params, "c", 0.0);
        r.b = [c](double u) { return c * u; };
        r.db = [c](double) { return c; };
        r.g = one;
        r.dg = zero;
        r.lip_b = std::abs(c);
        r.linear_b = true;
        r.linear_coef = c;
        r.constant_g = true;
    } else if (name == "sin" || name == "multiplicative") {
        const double a = name == "sin" ? param(params, "b_amp", 1.0) : 0.0;
        const double s = param(params, "g_amp", 0.5);
        if (std::abs(s) >= 1.0) throw SolverError("g_amp must be below 1 so that g stays positive");
        r.b = [a](double u) { return a * std::sin(u); };
        r.db = [a](double u) { return a * std::cos(u); };
        r.g = [s](double u) { return 1.0 + s * std::sin(u); };
        r.dg = [s](double u) { return s * std::cos(u); };
        r.lip_b = std::abs(a);
        r.lip_g = std::abs(s);
        r.linear_b = a == 0.0;
        r.constant_g = s == 0.0;
    } else {
        throw SolverError("unknown reaction '" + name + "'");
    }
    return r;
}

std::vector<std::string> reaction_names() { return {"zero", "linear", "damped", "sin", "multiplicative"}; }

ReactionCheck reaction_lipschitz_check(const ReactionSpec& r, double range, int points) {
    ReactionCheck c;
    const double h = 2.0 * range / (points - 1);
    double prev_u = -range;
    for (int i = 1; i < points; ++i) {
        const double u = -range + i * h;
        c.lip_b = std::max(c.lip_b, std::abs(r.b(u) - r.b(prev_u)) / h);
        c.lip_g = std::max(c.lip_g, std::abs(r.g(u) - r.g(prev_u)) / h);
        c.holder = std::max(c.holder, std::abs(r.db(u) - r.db(prev_u)) / std::pow(h, r.holder_exponent));
        prev_u = u;
    }
    const double slack = 1e-8;
    c.pass = c.lip_b <= r.lip_b + slack && c.lip_g <= r.lip_g + slack && std::isfinite(c.holder);
    return c;
}

// =============================================================================
// Controls and configuration
// =============================================================================

Control Control::zero(std::size_t steps, std::size_t modes, double dt) {
    Control c;
    c.phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(modes));
    c.dt = dt;
    return c;
}

double control_energy(const Control& c) { return 0.5 * c.phi.squaredNorm() * c.dt; }

std::size_t SpdeConfig::steps() const {
    const double n = T / dt;
    const auto s = static_cast<std::size_t>(std::llround(n));
    if (s == 0 || std::abs(n - static_cast<double>(s)) > 1e-9 * n) throw SolverError("dt must divide T");
    return s;
}

SpdeContext::SpdeContext(DiscreteGenerator A, ReactionSpec reaction, const NoiseBasis& basis, double dt, double theta,
                         const GraphWeight& gamma)
    : A_(std::move(A)), reaction_(std::move(reaction)), scheme_(A_, dt, theta) {
    E_ = basis.projected.empty() ? Eigen::MatrixXd::Zero(A_.size(), 0) : basis.matrix();
    if (E_.rows() != A_.size()) throw SolverError("noise basis does not match the graph");
    Q_ = weighted_mass_matrix(*A_.graph, A_.coeffs, gamma);
}

double SpdeContext::norm(const Eigen::VectorXd& f) const { return std::sqrt(std::max(0.0, f.dot(Q_ * f))); }

double SpdeContext::pairing(const Eigen::VectorXd& f, const Eigen::VectorXd& psi) const { return f.dot(Q_ * psi); }

// =============================================================================
// Time stepping
// =============================================================================

namespace {

template <class Step>
PathResult integrate(const SpdeContext& ctx, const Eigen::VectorXd& u0, std::size_t steps, std::size_t max_snapshots,
                     Step&& step) {
    PathResult out;
    out.graph = ctx.graph();
    const std::size_t stride = std::max<std::size_t>(1, (steps + max_snapshots - 1) / std::max<std::size_t>(1, max_snapshots));
    Eigen::VectorXd u = u0;
    out.times.push_back(0.0);
    out.states.push_back(u);
    out.sup_norm_H = ctx.norm(u);
    for (std::size_t n = 0; n < steps; ++n) {
        u = step(n, u);
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e12)
            throw SolverError("blow-up guard triggered at step " + std::to_string(n + 1));
        out.sup_norm_H = std::max(out.sup_norm_H, ctx.norm(u));
        if ((n + 1) % stride == 0 || n + 1 == steps) {
            out.times.push_back(static_cast<double>(n + 1) * ctx.dt());
            out.states.push_back(u);
        }
    }
    out.terminal = u;
    return out;
}

Eigen::VectorXd apply_fn(const std::function<double(double)>& f, const Eigen::VectorXd& u) {
    Eigen::VectorXd out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = f(u[i]);
    return out;
}

void check_config(const SpdeContext& ctx, const SpdeConfig& cfg) {
    if (std::abs(cfg.dt - ctx.dt()) > 1e-15 * ctx.dt() || cfg.theta != ctx.scheme().theta())
        throw SolverError("config time step or theta differs from the solver context");
    if (cfg.u0.values.size() != ctx.generator().size()) throw SolverError("initial condition does not match the graph");
    if (cfg.epsilon < 0.0) throw SolverError("epsilon must be nonnegative");
}

void check_control(const SpdeContext& ctx, const Control& v, std::size_t steps) {
    if (v.steps() != steps || v.modes() != ctx.modes()) throw SolverError("control grid mismatch");
}

/// One step of du = (L u + b(u)) dt + g(u) sum_j e_j (sqrt(eps) dB_j + v_j dt).
Eigen::VectorXd forced_step(const SpdeContext& ctx, const Eigen::VectorXd& u, const Eigen::VectorXd& forcing) {
    const auto& M = ctx.generator().mass;
    const ReactionSpec& r = ctx.reaction();
    Eigen::VectorXd rhs = ctx.scheme().explicit_part(u);
    rhs += ctx.dt() * M.cwiseProduct(apply_fn(r.b, u));
    if (forcing.size() > 0) rhs += M.cwiseProduct(apply_fn(r.g, u)).cwiseProduct(forcing);
    return ctx.scheme().solve(rhs);
}

}  // namespace

PathResult solve_deterministic(const SpdeContext& ctx, const GraphFunction& u0, double T, std::size_t max_snapshots) {
    SpdeConfig cfg;
    cfg.dt = ctx.dt();
    cfg.T = T;
    const std::size_t steps = cfg.steps();
    const Eigen::VectorXd none;
    return integrate(ctx, u0.values, steps, max_snapshots,
                     [&](std::size_t, const Eigen::VectorXd& u) { return forced_step(ctx, u, none); });
}

PathResult solve_deterministic(const DiscreteGenerator& A, const ReactionSpec& reaction, const GraphFunction& u0, double T,
                               double dt, double theta) {
    const SpdeContext ctx(A, reaction, NoiseBasis{}, dt, theta);
    return solve_deterministic(ctx, u0, T);
}

PathResult solve_controlled(const SpdeContext& ctx, const SpdeConfig& cfg, const Control& v, std::uint64_t seed,
                            std::uint64_t sample) {
    check_config(ctx, cfg);
    const std::size_t steps = cfg.steps();
    const bool controlled = v.phi.size() > 0;
    if (controlled) check_control(ctx, v, steps);
    const std::size_t J = ctx.modes();
    const WienerSample w = sample_increments(J, steps, cfg.dt, seed, sample);
    const double se = std::sqrt(cfg.epsilon);
    Eigen::VectorXd coef(static_cast<Eigen::Index>(J));
    auto out = integrate(ctx, cfg.u0.values, steps, cfg.max_snapshots, [&](std::size_t n, const Eigen::VectorXd& u) {
        const auto ni = static_cast<Eigen::Index>(n);
        coef = se * w.dB.col(ni);
        if (controlled) coef += cfg.dt * v.phi.row(ni).transpose();
        return forced_step(ctx, u, ctx.E() * coef);
    });
    out.seed = seed;
    out.sample = sample;
    return out;
}

PathResult solve_spde(const SpdeContext& ctx, const SpdeConfig& cfg, std::uint64_t seed, std::uint64_t sample) {
    return solve_controlled(ctx, cfg, Control{}, seed, sample);
}

PathResult solve_mdp_controlled(const SpdeContext& ctx, const SpdeConfig& cfg, double lambda, const Control& v,
                                const PathResult& u0_path, std::uint64_t seed, std::uint64_t sample) {
    check_config(ctx, cfg);
    if (!(lambda > 0.0)) throw SolverError("lambda must be positive");
    const std::size_t steps = cfg.steps();
    if (u0_path.states.size() != steps + 1) throw SolverError("deterministic path must store every step");
    const bool controlled = v.phi.size() > 0;
    if (controlled) check_control(ctx, v, steps);
    const std::size_t J = ctx.modes();
    const WienerSample w = sample_increments(J, steps, cfg.dt, seed, sample);
    const double kappa = std::sqrt(cfg.epsilon) * lambda;
    const auto& M = ctx.generator().mass;
    const ReactionSpec& r = ctx.reaction();
    Eigen::VectorXd coef(static_cast<Eigen::Index>(J));
    const Eigen::VectorXd m0 = Eigen::VectorXd::Zero(ctx.generator().size());
    auto out = integrate(ctx, m0, steps, cfg.max_snapshots, [&](std::size_t n, const Eigen::VectorXd& m) {
        const auto ni = static_cast<Eigen::Index>(n);
        const Eigen::VectorXd& u0 = u0_path.states[n];
        Eigen::VectorXd drift(m.size()), gv(m.size());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double shifted = u0[i] + kappa * m[i];
            drift[i] = kappa > 0.0 ? (r.b(shifted) - r.b(u0[i])) / kappa : r.db(u0[i]) * m[i];
            gv[i] = r.g(shifted);
        }
        coef = w.dB.col(ni) / lambda;
        if (controlled) coef += cfg.dt * v.phi.row(ni).transpose();
        Eigen::VectorXd rhs = ctx.scheme().explicit_part(m);
        rhs += cfg.dt * M.cwiseProduct(drift);
        rhs += M.cwiseProduct(gv).cwiseProduct(ctx.E() * coef);
        return ctx.scheme().solve(rhs);
    });
    out.seed = seed;
    out.sample = sample;
    return out;
}

PathResult deviation_path(const PathResult& u_eps, const PathResult& u0, double epsilon, double lambda) {
    if (u_eps.states.size() != u0.states.size()) throw SolverError("path grids differ");
    const double scale = std::sqrt(epsilon) * lambda;
    if (!(scale > 0.0)) throw SolverError("sqrt(eps) lambda must be positive");
    PathResult out;
    out.graph = u_eps.graph;
    out.times = u_eps.times;
    out.seed = u_eps.seed;
    out.sample = u_eps.sample;
    for (std::size_t i = 0; i < u_eps.states.size(); ++i) {
        if (std::abs(u_eps.times[i] - u0.times[i]) > 1e-12) throw SolverError("path grids differ");
        out.states.push_back((u_eps.states[i] - u0.states[i]) / scale);
    }
    out.terminal = out.states.back();
    return out;
}

double sup_distance(const SpdeContext& ctx, const PathResult& a, const PathResult& b) {
    if (a.states.size() != b.states.size()) throw SolverError("path grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.states.size(); ++i) s = std::max(s, ctx.norm(a.states[i] - b.states[i]));
    return s;
}

std::function<double(double)> parse_lambda(const std::string& spec) {
    static const std::regex power(R"(\s*eps\^-\s*([0-9.]+)(?:/([0-9.]+))?\s*)");
    std::smatch m;
    if (std::regex_match(spec, m, power)) {
        double p = std::stod(m[1].str());
        if (m[2].matched) p /= std::stod(m[2].str());
        return [p](double eps) { return std::pow(eps, -p); };
    }
    if (spec == "log") return [](double eps) { return std::log(1.0 / eps); };
    if (spec == "log1p") return [](double eps) { return std::log1p(1.0 / eps); };
    try {
        std::size_t used = 0;
        const double c = std::stod(spec, &used);
        if (used == spec.size()) return [c](double) { return c; };
    } catch (const std::exception&) {
    }
    throw SolverError("unparseable lambda spec '" + spec + "'");
}

}  // namespace fwg
