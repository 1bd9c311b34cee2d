#include "fwgraph/deviations.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

namespace fwg {

// =============================================================================
// Process model
// =============================================================================

ProcessModel ProcessModel::make(const SpdeContext& ctx, SpdeConfig cfg, Regime regime, double lambda) {
    ProcessModel m;
    m.ctx = &ctx;
    const std::size_t steps = cfg.steps();
    cfg.max_snapshots = steps;
    m.cfg = std::move(cfg);
    m.regime = regime;
    m.lambda = lambda;
    m.base = solve_deterministic(ctx, m.cfg.u0, m.cfg.T, steps);
    return m;
}

ProcessModel ProcessModel::at(double epsilon, double lambda) const {
    ProcessModel m = *this;
    m.cfg.epsilon = epsilon;
    m.lambda = lambda;
    return m;
}

double ProcessModel::noise_scale() const { return regime == Regime::LDP ? std::sqrt(cfg.epsilon) : 1.0 / lambda; }

PathResult ProcessModel::simulate(const Control& v, std::uint64_t seed, std::uint64_t sample) const {
    if (regime == Regime::LDP) return solve_controlled(*ctx, cfg, v, seed, sample);
    return solve_mdp_controlled(*ctx, cfg, lambda, v, base, seed, sample);
}

bool ProcessModel::occurs(const RareEvent& event, const PathResult& path) const {
    if (event.kind == EventKind::EndpointThreshold) return ctx->pairing(path.terminal, event.psi.values) > event.r;
    if (regime == Regime::LDP) return sup_distance(*ctx, path, base) > event.r;
    return path.sup_norm_H > event.r;
}

// =============================================================================
// Sampling
// =============================================================================

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& f) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const unsigned count = std::min<unsigned>(workers, static_cast<unsigned>(n));
    for (unsigned w = 0; w < count; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

struct SampleOutcome {
    bool hit = false;
    double weight = 1.0;
};

std::vector<SampleOutcome> run_samples(const RareEvent& event, const ProcessModel& model, const Control* v, std::size_t N,
                                       std::uint64_t seed, unsigned workers) {
    if (N < 100) throw SolverError("at least 100 samples are required");
    std::vector<SampleOutcome> out(N);
    const double s = model.noise_scale();
    const std::size_t steps = model.cfg.steps();
    const Control none;
    parallel_for(N, workers, [&](std::size_t i) {
        try {
            const PathResult path = model.simulate(v ? *v : none, seed, i);
            out[i].hit = model.occurs(event, path);
            if (v) {
                const WienerSample w = sample_increments(model.ctx->modes(), steps, model.cfg.dt, seed, i);
                double lw = 0.0;
                for (std::size_t n = 0; n < steps; ++n)
                    for (std::size_t j = 0; j < model.ctx->modes(); ++j) {
                        const double th = v->phi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) / s;
                        lw -= th * w.dB(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) + 0.5 * th * th * model.cfg.dt;
                    }
                out[i].weight = std::exp(lw);
            }
        } catch (const SolverError& e) {
            throw SolverError(std::string(e.what()) + " (sample " + std::to_string(i) + ")");
        }
    });
    return out;
}

MCEstimate reduce(const std::vector<SampleOutcome>& s, bool weighted, std::uint64_t seed) {
    MCEstimate e;
    e.n = s.size();
    e.seed = seed;
    e.importance_sampled = weighted;
    const double n = static_cast<double>(s.size());
    double sy = 0.0, syy = 0.0, sw = 0.0, sww = 0.0;
    for (const auto& o : s) {
        const double y = o.hit ? o.weight : 0.0;
        sy += y;
        syy += y * y;
        sw += o.weight;
        sww += o.weight * o.weight;
        e.hits += o.hit ? 1 : 0;
    }
    e.p = sy / n;
    e.se = std::sqrt(std::max(0.0, syy / n - e.p * e.p) / (n - 1.0));
    e.ess = syy > 0.0 ? sy * sy / syy : 0.0;
    e.mean_weight = sw / n;
    e.weight_se = std::sqrt(std::max(0.0, sww / n - e.mean_weight * e.mean_weight) / (n - 1.0));
    e.zero_hits = e.hits == 0;
    e.degenerate_ess = weighted && e.ess < 10.0;
    return e;
}

}  // namespace

MCEstimate estimate_probability(const RareEvent& event, const ProcessModel& model, std::size_t N, std::uint64_t seed,
                                unsigned workers) {
    return reduce(run_samples(event, model, nullptr, N, seed, workers), false, seed);
}

MCEstimate girsanov_is_estimate(const RareEvent& event, const ProcessModel& model, const Control& v, std::size_t N,
                                std::uint64_t seed, unsigned workers) {
    if (v.steps() != model.cfg.steps() || v.modes() != model.ctx->modes()) throw SolverError("control grid mismatch");
    return reduce(run_samples(event, model, &v, N, seed, workers), true, seed);
}

// =============================================================================
// Scale checks and fits
// =============================================================================

MdpScaleReport mdp_scale_check(const std::function<double(double)>& lambda, std::vector<double> eps_ladder) {
    if (eps_ladder.size() < 2) throw SolverError("epsilon ladder needs at least two values");
    std::sort(eps_ladder.begin(), eps_ladder.end(), std::greater<>());
    const double ratio = eps_ladder[eps_ladder.size() - 1] / eps_ladder[eps_ladder.size() - 2];
    double e = eps_ladder.back();
    const double stop = eps_ladder.back() * 1e-2;
    while (e * ratio >= stop * (1.0 - 1e-12)) {
        e *= ratio;
        eps_ladder.push_back(e);
    }
    MdpScaleReport r;
    r.lambda_to_infinity = r.sqrt_eps_lambda_to_zero = true;
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
        const double l = lambda(eps_ladder[i]);
        r.epsilon.push_back(eps_ladder[i]);
        r.lambda.push_back(l);
        r.sqrt_eps_lambda.push_back(std::sqrt(eps_ladder[i]) * l);
        if (i > 0) {
            if (!(r.lambda[i] > r.lambda[i - 1] * (1.0 + 1e-12))) r.lambda_to_infinity = false;
            if (!(r.sqrt_eps_lambda[i] < r.sqrt_eps_lambda[i - 1] * (1.0 - 1e-12))) r.sqrt_eps_lambda_to_zero = false;
        }
    }
    return r;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw SolverError("slope fit needs at least three points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw SolverError("slope fit needs finite values");
    SlopeFit f;
    f.x = x;
    f.y = y;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

namespace {

DeviationAudit deviation_audit(Regime regime, const RareEvent& event, const ProcessModel& model,
                               const std::vector<double>& eps_grid, const std::function<double(double)>& lambda,
                               SamplingMethod method, const Control& v, double J, std::size_t N, std::uint64_t seed,
                               unsigned workers) {
    if (eps_grid.size() < 3) throw SolverError("deviation audit needs at least three epsilon values");
    DeviationAudit a;
    a.regime = regime;
    std::vector<double> xs, ys;
    for (const double eps : eps_grid) {
        DeviationRow row;
        row.epsilon = eps;
        row.lambda = regime == Regime::MDP ? lambda(eps) : 1.0 / std::sqrt(eps);
        const ProcessModel m = model.at(eps, regime == Regime::MDP ? row.lambda : 1.0);
        if (method == SamplingMethod::Importance) {
            row.estimate = girsanov_is_estimate(event, m, v, N, seed, workers);
        } else {
            row.estimate = estimate_probability(event, m, N, seed, workers);
            if (method == SamplingMethod::Auto && row.estimate.hits < 20)
                row.estimate = girsanov_is_estimate(event, m, v, N, seed, workers);
            else if (row.estimate.zero_hits)
                throw SolverError("insufficient sampling: no hits at eps=" + std::to_string(eps));
        }
        const double speed = regime == Regime::LDP ? eps : 1.0 / (row.lambda * row.lambda);
        row.scaled_log = row.estimate.p > 0.0 ? -speed * std::log(row.estimate.p) : std::numeric_limits<double>::infinity();
        row.J_ref = J;
        row.excluded = !(row.estimate.p > 0.0) || row.estimate.se / row.estimate.p > 0.3 || !(row.scaled_log > 0.0);
        if (!row.excluded) {
            xs.push_back(std::log(eps));
            ys.push_back(std::log(row.scaled_log));
        }
        a.rows.push_back(row);
    }
    if (xs.size() >= 3) a.fit = fit_slope(xs, ys);
    auto rel = [&](const DeviationRow& r) { return std::abs(r.scaled_log - J) / J; };
    const auto smallest = std::min_element(a.rows.begin(), a.rows.end(), [](const auto& p, const auto& q) { return p.epsilon < q.epsilon; });
    const auto largest = std::max_element(a.rows.begin(), a.rows.end(), [](const auto& p, const auto& q) { return p.epsilon < q.epsilon; });
    a.final_relative_error = rel(*smallest);
    a.trend_toward_J = rel(*smallest) <= rel(*largest);
    return a;
}

}  // namespace

DeviationAudit ldp_slope_audit(const RareEvent& event, const ProcessModel& model, const std::vector<double>& eps_grid,
                               SamplingMethod method, const Control& v, double J, std::size_t N, std::uint64_t seed,
                               unsigned workers) {
    if (model.regime != Regime::LDP) throw SolverError("LDP audit needs an LDP process model");
    return deviation_audit(Regime::LDP, event, model, eps_grid, {}, method, v, J, N, seed, workers);
}

DeviationAudit mdp_slope_audit(const RareEvent& event, const ProcessModel& model, const std::vector<double>& eps_grid,
                               const std::function<double(double)>& lambda, SamplingMethod method, const Control& v,
                               double J, std::size_t N, std::uint64_t seed, unsigned workers) {
    if (model.regime != Regime::MDP) throw SolverError("MDP audit needs an MDP process model");
    if (!mdp_scale_check(lambda, eps_grid).pass()) throw SolverError("lambda(eps) fails the moderate-deviation scale check");
    return deviation_audit(Regime::MDP, event, model, eps_grid, lambda, method, v, J, N, seed, workers);
}

std::vector<VarianceRow> mdp_variance_check(const GraphFunction& psi, const ProcessModel& model,
                                            const std::vector<double>& eps_grid,
                                            const std::function<double(double)>& lambda, std::size_t N,
                                            std::uint64_t seed, unsigned workers) {
    if (model.regime != Regime::MDP) throw SolverError("variance check needs an MDP process model");
    std::vector<VarianceRow> rows;
    const Control none;
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
        const double eps = eps_grid[k];
        // disjoint sample indices so the rows are independent
        const std::uint64_t offset = static_cast<std::uint64_t>(k) * N;
        VarianceRow row;
        row.epsilon = eps;
        row.lambda = lambda(eps);
        const ProcessModel m = model.at(eps, row.lambda);
        std::vector<double> vals(N);
        parallel_for(N, workers, [&](std::size_t i) {
            vals[i] = row.lambda * model.ctx->pairing(m.simulate(none, seed, offset + i).terminal, psi.values);
        });
        const double n = static_cast<double>(N);
        double s = 0.0;
        for (double x : vals) s += x;
        row.mean = s / n;
        double ss = 0.0;
        for (double x : vals) ss += (x - row.mean) * (x - row.mean);
        row.variance = ss / (n - 1.0);
        row.variance_se = row.variance * std::sqrt(2.0 / (n - 1.0));
        rows.push_back(row);
    }
    return rows;
}

namespace {

ErrorAudit error_audit(const ProcessModel& model, const std::vector<double>& eps_grid,
                       const std::function<double(double)>& lambda, const std::function<double(double, double)>& envelope,
                       const Control& v, const PathResult& reference, std::size_t reps, std::uint64_t seed,
                       unsigned workers) {
    ErrorAudit a;
    std::vector<double> xs, ys;
    for (const double eps : eps_grid) {
        ErrorRow row;
        row.epsilon = eps;
        row.lambda = lambda ? lambda(eps) : 1.0;
        const ProcessModel m = model.at(eps, row.lambda);
        std::vector<double> err(reps);
        parallel_for(reps, workers, [&](std::size_t i) {
            const double d = sup_distance(*model.ctx, m.simulate(v, seed, i), reference);
            err[i] = d * d;
        });
        const double n = static_cast<double>(reps);
        double s = 0.0, ss = 0.0;
        for (double e : err) s += e;
        row.mse = s / n;
        for (double e : err) ss += (e - row.mse) * (e - row.mse);
        row.se = std::sqrt(ss / (n - 1.0) / n);
        row.envelope = envelope(eps, row.lambda);
        xs.push_back(std::log(eps));
        ys.push_back(std::log(row.mse));
        a.rows.push_back(row);
    }
    // envelope drawn through the first point
    const double scale = a.rows.front().mse / a.rows.front().envelope;
    for (auto& r : a.rows) r.envelope *= scale;
    a.fit = fit_slope(xs, ys);
    return a;
}

}  // namespace

ErrorAudit controlled_error_rate_audit(const ProcessModel& model, const std::vector<double>& eps_grid, const Control& v,
                                       std::size_t reps, std::uint64_t seed, unsigned workers) {
    if (model.regime != Regime::LDP) throw SolverError("controlled error audit needs an LDP process model");
    const PathResult Z = solve_skeleton_ldp(*model.ctx, model.cfg.u0, v);
    return error_audit(model, eps_grid, {}, [](double eps, double) { return eps; }, v, Z, reps, seed, workers);
}

ErrorAudit mdp_error_rate_audit(const ProcessModel& model, const std::vector<double>& eps_grid,
                                const std::function<double(double)>& lambda, double alpha0, const Control& v,
                                std::size_t reps, std::uint64_t seed, unsigned workers) {
    if (model.regime != Regime::MDP) throw SolverError("MDP error audit needs an MDP process model");
    const PathResult R = solve_skeleton_mdp(*model.ctx, model.base, v);
    auto env = [alpha0](double eps, double lam) { return std::pow(std::sqrt(eps) * lam, 2.0 * alpha0) + 1.0 / (lam * lam); };
    return error_audit(model, eps_grid, lambda, env, v, R, reps, seed, workers);
}

// =============================================================================
// CSV output
// =============================================================================

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SolverError("cannot write " + path);
    out << std::setprecision(12);
    return out;
}

}  // namespace

void write_ldp_csv(const std::string& path, const DeviationAudit& audit) {
    auto out = open_csv(path);
    out << "epsilon,p_hat,se,neg_eps_ln_p,J_ref\n";
    for (const auto& r : audit.rows)
        out << r.epsilon << ',' << r.estimate.p << ',' << r.estimate.se << ',' << r.scaled_log << ',' << r.J_ref << '\n';
}

void write_mdp_csv(const std::string& path, const DeviationAudit& audit) {
    auto out = open_csv(path);
    out << "epsilon,lambda,p_hat,se,neg_lam2_ln_p,J_ref\n";
    for (const auto& r : audit.rows)
        out << r.epsilon << ',' << r.lambda << ',' << r.estimate.p << ',' << r.estimate.se << ',' << r.scaled_log << ','
            << r.J_ref << '\n';
}

void write_error_csv(const std::string& path, const ErrorAudit& audit) {
    auto out = open_csv(path);
    out << "epsilon,mse,se,envelope\n";
    for (const auto& r : audit.rows) out << r.epsilon << ',' << r.mse << ',' << r.se << ',' << r.envelope << '\n';
}

}  // namespace fwg
