#include "fwgraph/skeleton.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace fwg {

std::string to_string(Regime r) { return r == Regime::LDP ? "ldp" : "mdp"; }
std::string to_string(RateMode m) { return m == RateMode::Adjoint ? "adjoint" : "lq_oracle"; }

namespace {

Eigen::VectorXd apply_fn(const std::function<double(double)>& f, const Eigen::VectorXd& u) {
    Eigen::VectorXd out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = f(u[i]);
    return out;
}

std::size_t step_count(const SpdeContext& ctx, double T) {
    SpdeConfig cfg;
    cfg.dt = ctx.dt();
    cfg.T = T;
    return cfg.steps();
}

/// Deterministic path with every step stored.
PathResult full_deterministic(const SpdeContext& ctx, const GraphFunction& u0, double T) {
    return solve_deterministic(ctx, u0, T, step_count(ctx, T));
}

bool is_linear_quadratic(const EndpointProblem& p, const SpdeContext& ctx) {
    return p.regime == Regime::MDP || (ctx.reaction().linear_b && ctx.reaction().constant_g);
}

/// Forward sweep storing every state; returns the stored states.
std::vector<Eigen::VectorXd> forward_states(const EndpointProblem& p, const SpdeContext& ctx, const Control& phi,
                                            const std::vector<Eigen::VectorXd>* base) {
    const std::size_t N = phi.steps();
    const auto& M = ctx.generator().mass;
    const ReactionSpec& r = ctx.reaction();
    const double dt = ctx.dt();
    std::vector<Eigen::VectorXd> u(N + 1);
    u[0] = p.regime == Regime::LDP ? p.u0.values : Eigen::VectorXd::Zero(ctx.generator().size());
    for (std::size_t n = 0; n < N; ++n) {
        const Eigen::VectorXd forcing = ctx.E() * (dt * phi.phi.row(static_cast<Eigen::Index>(n)).transpose());
        Eigen::VectorXd rhs = ctx.scheme().explicit_part(u[n]);
        if (p.regime == Regime::LDP) {
            rhs += dt * M.cwiseProduct(apply_fn(r.b, u[n]));
            rhs += M.cwiseProduct(apply_fn(r.g, u[n])).cwiseProduct(forcing);
        } else {
            const Eigen::VectorXd& u0 = (*base)[n];
            rhs += dt * M.cwiseProduct(apply_fn(r.db, u0)).cwiseProduct(u[n]);
            rhs += M.cwiseProduct(apply_fn(r.g, u0)).cwiseProduct(forcing);
        }
        u[n + 1] = ctx.scheme().solve(rhs);
        if (!u[n + 1].allFinite() || u[n + 1].cwiseAbs().maxCoeff() > 1e12)
            throw SolverError("blow-up guard triggered at step " + std::to_string(n + 1));
    }
    return u;
}

class Objective {
public:
    Objective(const EndpointProblem& p, const SpdeContext& ctx) : p_(p), ctx_(ctx), N_(step_count(ctx, p.T)) {
        if (p.psi.values.size() != ctx.generator().size()) throw SolverError("observable does not match the graph");
        Qpsi_ = ctx.Q() * p.psi.values;
        if (Qpsi_.norm() == 0.0) throw SolverError("observable psi is zero");
        if (p.regime == Regime::MDP) base_ = full_deterministic(ctx, p.u0, p.T).states;
    }

    [[nodiscard]] std::size_t steps() const { return N_; }
    [[nodiscard]] double endpoint(const Control& phi) const { return forward_states(p_, ctx_, phi, base()).back().dot(Qpsi_); }

    double operator()(const Control& phi, double rho, Eigen::MatrixXd* grad) const {
        if (phi.steps() != N_ || phi.modes() != ctx_.modes()) throw SolverError("control grid mismatch");
        const auto u = forward_states(p_, ctx_, phi, base());
        const double dt = ctx_.dt();
        const double c = u.back().dot(Qpsi_) - p_.r;
        const double F = control_energy(phi) + rho * c * c;
        if (!grad) return F;
        const auto& M = ctx_.generator().mass;
        const ReactionSpec& r = ctx_.reaction();
        grad->resize(phi.phi.rows(), phi.phi.cols());
        Eigen::VectorXd pvec = 2.0 * rho * c * Qpsi_;
        for (std::size_t k = N_; k-- > 0;) {
            const auto n = static_cast<Eigen::Index>(k);
            const Eigen::VectorXd lam = ctx_.scheme().solve(pvec);
            const Eigen::VectorXd Mlam = M.cwiseProduct(lam);
            const Eigen::VectorXd& state = p_.regime == Regime::LDP ? u[k] : base_[k];
            const Eigen::VectorXd gM = apply_fn(r.g, state).cwiseProduct(Mlam);
            grad->row(n) = (dt * phi.phi.row(n).transpose() + dt * ctx_.E().transpose() * gM).transpose();
            Eigen::VectorXd next = ctx_.scheme().explicit_operator().transpose() * lam;
            next += dt * apply_fn(r.db, state).cwiseProduct(Mlam);
            if (p_.regime == Regime::LDP) {
                const Eigen::VectorXd forcing = ctx_.E() * (dt * phi.phi.row(n).transpose());
                next += apply_fn(r.dg, state).cwiseProduct(Mlam).cwiseProduct(forcing);
            }
            pvec = next;
        }
        return F;
    }

private:
    [[nodiscard]] const std::vector<Eigen::VectorXd>* base() const { return p_.regime == Regime::MDP ? &base_ : nullptr; }

    const EndpointProblem& p_;
    const SpdeContext& ctx_;
    std::size_t N_;
    Eigen::VectorXd Qpsi_;
    std::vector<Eigen::VectorXd> base_;
};

class CeresObjective : public ceres::FirstOrderFunction {
public:
    CeresObjective(const Objective& f, double rho, Eigen::Index rows, Eigen::Index cols, double dt)
        : f_(f), rho_(rho), rows_(rows), cols_(cols), dt_(dt) {}

    bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
        Control c;
        c.dt = dt_;
        c.phi = Eigen::Map<const Eigen::MatrixXd>(parameters, rows_, cols_);
        try {
            if (gradient) {
                Eigen::MatrixXd g;
                *cost = f_(c, rho_, &g);
                Eigen::Map<Eigen::MatrixXd>(gradient, rows_, cols_) = g;
            } else {
                *cost = f_(c, rho_, nullptr);
            }
        } catch (const SolverError&) {
            return false;
        }
        return std::isfinite(*cost);
    }
    int NumParameters() const override { return static_cast<int>(rows_ * cols_); }

private:
    const Objective& f_;
    double rho_;
    Eigen::Index rows_, cols_;
    double dt_;
};

/// Conjugate gradients on a quadratic objective, from the current control.
int minimize_quadratic(const Objective& f, double rho, Control& phi, int max_iter) {
    Control zero = phi;
    zero.phi.setZero();
    Eigen::MatrixXd g0;
    f(zero, rho, &g0);
    auto hess = [&](const Eigen::MatrixXd& v) {
        Control c = zero;
        c.phi = v;
        Eigen::MatrixXd g;
        f(c, rho, &g);
        return Eigen::MatrixXd(g - g0);
    };
    Eigen::MatrixXd res = -(hess(phi.phi) + g0);
    Eigen::MatrixXd dir = res;
    double rr = res.squaredNorm();
    const double stop = 1e-28 * std::max(g0.squaredNorm(), 1e-300);
    int it = 0;
    for (; it < max_iter && rr > stop; ++it) {
        const Eigen::MatrixXd Hd = hess(dir);
        const double curv = (dir.array() * Hd.array()).sum();
        if (!(curv > 0.0)) break;
        const double step = rr / curv;
        phi.phi += step * dir;
        res -= step * Hd;
        const double rr_new = res.squaredNorm();
        dir = res + (rr_new / rr) * dir;
        rr = rr_new;
    }
    return it;
}

int minimize_lbfgs(const Objective& f, double rho, Control& phi, int max_iter) {
    ceres::GradientProblemSolver::Options opts;
    opts.line_search_direction_type = ceres::LBFGS;
    opts.max_lbfgs_rank = 10;
    opts.max_num_iterations = max_iter;
    opts.logging_type = ceres::SILENT;
    opts.minimizer_progress_to_stdout = false;
    opts.function_tolerance = 1e-15;
    opts.gradient_tolerance = 1e-13;
    opts.parameter_tolerance = 1e-14;
    ceres::GradientProblem problem(new CeresObjective(f, rho, phi.phi.rows(), phi.phi.cols(), phi.dt));
    Eigen::MatrixXd x = phi.phi;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(opts, problem, x.data(), &summary);
    phi.phi = x;
    return static_cast<int>(summary.iterations.size());
}

}  // namespace

// =============================================================================
// Skeleton equations
// =============================================================================

PathResult solve_skeleton_ldp(const SpdeContext& ctx, const GraphFunction& u0, const Control& phi) {
    SpdeConfig cfg;
    cfg.epsilon = 0.0;
    cfg.dt = ctx.dt();
    cfg.theta = ctx.scheme().theta();
    cfg.T = static_cast<double>(phi.steps()) * ctx.dt();
    cfg.u0 = u0;
    cfg.max_snapshots = phi.steps();
    return solve_controlled(ctx, cfg, phi, 0, 0);
}

PathResult solve_skeleton_mdp(const SpdeContext& ctx, const PathResult& u0_path, const Control& phi) {
    EndpointProblem p;
    p.regime = Regime::MDP;
    const std::size_t N = phi.steps();
    if (u0_path.states.size() != N + 1) throw SolverError("deterministic path must store every step");
    if (phi.modes() != ctx.modes()) throw SolverError("control grid mismatch");
    const auto states = forward_states(p, ctx, phi, &u0_path.states);
    PathResult out;
    out.graph = ctx.graph();
    for (std::size_t n = 0; n <= N; ++n) {
        out.times.push_back(static_cast<double>(n) * ctx.dt());
        out.sup_norm_H = std::max(out.sup_norm_H, ctx.norm(states[n]));
    }
    out.states = states;
    out.terminal = states.back();
    return out;
}

double endpoint_objective(const EndpointProblem& problem, const SpdeContext& ctx, const Control& phi, double rho,
                          Eigen::MatrixXd* gradient) {
    return Objective(problem, ctx)(phi, rho, gradient);
}

// =============================================================================
// Linear-quadratic closed form
// =============================================================================

LqOracle lq_oracle(const SpdeContext& ctx, const GraphFunction& psi, double T) {
    const ReactionSpec& r = ctx.reaction();
    if (!r.linear_b || !r.constant_g) throw SolverError("closed form needs linear b and constant g");
    const double c = r.linear_coef;
    const double gc = r.g(0.0);
    const std::size_t N = step_count(ctx, T);
    const double dt = ctx.dt(), th = ctx.scheme().theta();
    const Spectrum sp = generator_spectrum(ctx.generator());
    const Eigen::MatrixXd& V = sp.vectors;
    const Eigen::VectorXd cvec = V.transpose() * (ctx.Q() * psi.values);
    const Eigen::MatrixXd D = V.transpose() * ctx.generator().mass.asDiagonal() * (gc * ctx.E());  // column j = d_j
    const Eigen::Index n = sp.values.size();
    Eigen::VectorXd rho(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = sp.values[i];
        s[i] = 1.0 / (1.0 + th * dt * l);
        rho[i] = (1.0 - (1.0 - th) * dt * l + c * dt) * s[i];
    }
    LqOracle o;
    o.a.resize(static_cast<Eigen::Index>(N), D.cols());
    Eigen::VectorXd pw = Eigen::VectorXd::Ones(n);
    for (std::size_t m = 0; m < N; ++m) {
        // step n = N-1-m sees m further propagations
        const Eigen::VectorXd w = cvec.cwiseProduct(pw).cwiseProduct(s);
        o.a.row(static_cast<Eigen::Index>(N - 1 - m)) = (D.transpose() * w).transpose();
        pw = pw.cwiseProduct(rho);
    }
    o.sigma2 = dt * o.a.squaredNorm();

    double cont = 0.0;
    for (Eigen::Index j = 0; j < D.cols(); ++j) {
        const Eigen::VectorXd cd = cvec.cwiseProduct(D.col(j));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index k = 0; k < n; ++k) {
                const double mu = sp.values[i] + sp.values[k] - 2.0 * c;
                const double f = std::abs(mu * T) < 1e-12 ? T : -std::expm1(-mu * T) / mu;
                cont += cd[i] * cd[k] * f;
            }
    }
    o.sigma2_continuous = cont;
    return o;
}

// =============================================================================
// Penalty optimization
// =============================================================================

RateEstimate minimize_rate_endpoint(const EndpointProblem& problem, const SpdeContext& ctx, RateMode mode) {
    const Objective f(problem, ctx);
    const std::size_t N = f.steps();
    RateEstimate est;
    est.phi = Control::zero(N, ctx.modes(), ctx.dt());
    const double base = f.endpoint(est.phi);
    est.shifted_target = problem.r - base;

    if (mode == RateMode::LqOracle) {
        if (problem.regime == Regime::LDP && !(ctx.reaction().linear_b && ctx.reaction().constant_g))
            throw SolverError("lq_oracle mode needs linear b and constant g");
        const LqOracle o = lq_oracle(ctx, problem.psi, problem.T);
        est.J = est.shifted_target * est.shifted_target / (2.0 * o.sigma2);
        est.phi.phi = (est.shifted_target / o.sigma2) * o.a;
        est.endpoint = f.endpoint(est.phi);
        est.residual = std::abs(est.endpoint - problem.r);
        return est;
    }

    const double scale = std::max(std::abs(est.shifted_target), 1e-300);
    const bool lq = is_linear_quadratic(problem, ctx);
    double rho = problem.rho0;
    for (int k = 0; k < problem.outer_iters; ++k, rho *= problem.rho_growth) {
        PenaltyStep st;
        st.rho = rho;
        st.iterations = lq ? minimize_quadratic(f, rho, est.phi, problem.inner_iters)
                           : minimize_lbfgs(f, rho, est.phi, problem.inner_iters);
        st.objective = f(est.phi, rho, nullptr);
        st.energy = control_energy(est.phi);
        est.endpoint = f.endpoint(est.phi);
        st.residual = std::abs(est.endpoint - problem.r);
        est.trace.push_back(st);
        if (est.shifted_target == 0.0 || st.residual <= problem.tol * scale) {
            est.residual = st.residual;
            est.J = st.energy;
            return est;
        }
    }
    throw RateError("penalty loop did not reach the residual tolerance", est.trace);
}

double gradient_check(const EndpointProblem& problem, const SpdeContext& ctx, const Control& phi0,
                      const std::vector<Eigen::MatrixXd>& directions, double step) {
    const Objective f(problem, ctx);
    Eigen::MatrixXd grad;
    f(phi0, problem.rho0, &grad);
    double worst = 0.0;
    for (const auto& d : directions) {
        const double ad = (grad.array() * d.array()).sum();
        Control plus = phi0, minus = phi0;
        plus.phi += step * d;
        minus.phi -= step * d;
        const double fd = (f(plus, problem.rho0, nullptr) - f(minus, problem.rho0, nullptr)) / (2.0 * step);
        const double denom = std::max(std::abs(ad), std::abs(fd));
        if (denom == 0.0) continue;
        worst = std::max(worst, std::abs(fd - ad) / denom);
    }
    return worst;
}

std::vector<Eigen::MatrixXd> random_directions(std::size_t count, std::size_t steps, std::size_t modes, std::uint64_t seed) {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t c = 0; c < count; ++c) {
        Eigen::MatrixXd d(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(modes));
        for (Eigen::Index n = 0; n < d.rows(); ++n)
            for (Eigen::Index j = 0; j < d.cols(); ++j)
                d(n, j) = counter_normal(seed, c, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(n));
        out.push_back(d / d.norm());
    }
    return out;
}

}  // namespace fwg
