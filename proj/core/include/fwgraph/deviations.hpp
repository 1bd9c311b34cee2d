#pragma once

// =============================================================================
// fwgraph - rare-event estimation, importance sampling and slope audits
// =============================================================================

#include "fwgraph/skeleton.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fwg {

enum class EventKind { EndpointThreshold, SupBallExit };

struct RareEvent {
    EventKind kind = EventKind::EndpointThreshold;
    /// Endpoint pairing <u(T), psi>_H; ignored for sup-ball exits.
    GraphFunction psi;
    /// Threshold (endpoint) or radius (exit).
    double r = 0.0;
};

/// Which process the event is evaluated on.
///
/// LDP: u^eps itself (sup-ball exits measure distance to the deterministic path).
/// MDP: the deviation process X = (u^eps - u0)/(sqrt(eps) lambda).
struct ProcessModel {
    const SpdeContext* ctx = nullptr;
    SpdeConfig cfg;
    Regime regime = Regime::LDP;
    double lambda = 1.0;
    /// Deterministic path from cfg.u0, every step stored.
    PathResult base;

    static ProcessModel make(const SpdeContext& ctx, SpdeConfig cfg, Regime regime, double lambda = 1.0);
    [[nodiscard]] ProcessModel at(double epsilon, double lambda = 1.0) const;
    /// Noise amplitude s in s dB + v dt: sqrt(eps) (LDP) or 1/lambda (MDP).
    [[nodiscard]] double noise_scale() const;
    [[nodiscard]] PathResult simulate(const Control& v, std::uint64_t seed, std::uint64_t sample) const;
    [[nodiscard]] bool occurs(const RareEvent& event, const PathResult& path) const;
};

struct MCEstimate {
    double p = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t hits = 0;
    double ess = 0.0;
    bool zero_hits = false;
    bool degenerate_ess = false;
    /// Mean and standard error of the likelihood-ratio weights.
    double mean_weight = 1.0;
    double weight_se = 0.0;
    bool importance_sampled = false;
    std::uint64_t seed = 0;
};

MCEstimate estimate_probability(const RareEvent& event, const ProcessModel& model, std::size_t N, std::uint64_t seed,
                                unsigned workers = 1);

/// Simulates under the control v and weights by exp(-sum theta dB - (1/2) sum theta^2 dt), theta = v / noise_scale.
MCEstimate girsanov_is_estimate(const RareEvent& event, const ProcessModel& model, const Control& v, std::size_t N,
                                std::uint64_t seed, unsigned workers = 1);

/// Per-sample worker pool: f(i) for i in [0, n) with deterministic result order.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& f);

// =============================================================================
// Scale checks and slope fits
// =============================================================================

struct MdpScaleReport {
    std::vector<double> epsilon;
    std::vector<double> lambda;
    std::vector<double> sqrt_eps_lambda;
    bool lambda_to_infinity = false;
    bool sqrt_eps_lambda_to_zero = false;
    [[nodiscard]] bool pass() const { return lambda_to_infinity && sqrt_eps_lambda_to_zero; }
};

/// Verifies lambda -> infinity and sqrt(eps) lambda -> 0 on the ladder extended by two decades.
MdpScaleReport mdp_scale_check(const std::function<double(double)>& lambda, std::vector<double> eps_ladder);

struct SlopeFit {
    std::vector<double> x;
    std::vector<double> y;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares line through (x, y); needs at least three finite points.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

enum class SamplingMethod { Vanilla, Importance, Auto };

struct DeviationRow {
    double epsilon = 0.0;
    double lambda = 1.0;
    MCEstimate estimate;
    /// -eps ln p (LDP) or -lambda^2 ln p (MDP).
    double scaled_log = 0.0;
    double J_ref = 0.0;
    bool excluded = false;
};

struct DeviationAudit {
    Regime regime = Regime::LDP;
    std::vector<DeviationRow> rows;
    /// Fit of ln(scaled_log) against ln(eps) over the included rows.
    SlopeFit fit;
    /// |scaled_log - J| / J at the smallest epsilon.
    double final_relative_error = 0.0;
    /// Relative errors shrink from the largest to the smallest epsilon.
    bool trend_toward_J = false;
};

/// -eps ln p over an eps ladder against the endpoint rate J; the IS tilt is v.
DeviationAudit ldp_slope_audit(const RareEvent& event, const ProcessModel& model, const std::vector<double>& eps_grid,
                               SamplingMethod method, const Control& v, double J, std::size_t N, std::uint64_t seed,
                               unsigned workers = 1);

/// -lambda^2 ln p for events on the deviation process.
DeviationAudit mdp_slope_audit(const RareEvent& event, const ProcessModel& model, const std::vector<double>& eps_grid,
                               const std::function<double(double)>& lambda, SamplingMethod method, const Control& v,
                               double J, std::size_t N, std::uint64_t seed, unsigned workers = 1);

struct VarianceRow {
    double epsilon = 0.0;
    double lambda = 1.0;
    double mean = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
};

/// Sample variance of lambda <X(T), psi> across the ladder.
std::vector<VarianceRow> mdp_variance_check(const GraphFunction& psi, const ProcessModel& model,
                                            const std::vector<double>& eps_grid,
                                            const std::function<double(double)>& lambda, std::size_t N,
                                            std::uint64_t seed, unsigned workers = 1);

struct ErrorRow {
    double epsilon = 0.0;
    double lambda = 1.0;
    double mse = 0.0;
    double se = 0.0;
    double envelope = 0.0;
};

struct ErrorAudit {
    std::vector<ErrorRow> rows;
    SlopeFit fit;
};

/// E[sup_t |U^v_eps - Z^v|^2] over the ladder (controlled LDP equation vs skeleton).
ErrorAudit controlled_error_rate_audit(const ProcessModel& model, const std::vector<double>& eps_grid, const Control& v,
                                       std::size_t reps, std::uint64_t seed, unsigned workers = 1);

/// E[sup_t |M^v_eps - R^v|^2] with envelope (sqrt(eps) lambda)^{2 alpha0} + lambda^-2.
ErrorAudit mdp_error_rate_audit(const ProcessModel& model, const std::vector<double>& eps_grid,
                                const std::function<double(double)>& lambda, double alpha0, const Control& v,
                                std::size_t reps, std::uint64_t seed, unsigned workers = 1);

void write_ldp_csv(const std::string& path, const DeviationAudit& audit);
void write_mdp_csv(const std::string& path, const DeviationAudit& audit);
void write_error_csv(const std::string& path, const ErrorAudit& audit);

}  // namespace fwg
