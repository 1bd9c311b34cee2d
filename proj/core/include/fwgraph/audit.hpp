#pragma once

// =============================================================================
// fwgraph - weight hypotheses and the compact/non-compact embedding audit
// =============================================================================

#include "fwgraph/metric_graph.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fwg {

/// Radial weight profile theta(z); gamma(z,k) = theta(z) on every edge.
struct WeightSpec {
    enum class Form { Power, ExpSqrt, Constant, Custom };

    Form form = Form::Power;
    double c0 = 1.0;
    double kappa1 = 2.5;
    double kappa2 = 1.0;
    /// Shift keeping theta bounded at z = 0.
    double z0 = 1.0;
    std::function<double(double)> custom_value, custom_d1, custom_d2;

    /// c0 (z + z0)^-kappa1
    static WeightSpec power(double c0, double kappa1, double z0 = 1.0);
    /// c0 exp(-kappa2 (sqrt(z + z0) - sqrt(z0)))
    static WeightSpec exp_sqrt(double c0, double kappa2, double z0 = 1.0);
    static WeightSpec constant(double c0 = 1.0);
    static WeightSpec custom(std::function<double(double)> value, std::function<double(double)> d1,
                             std::function<double(double)> d2);
    /// "power", "exp_sqrt", "constant".
    static WeightSpec from_name(const std::string& form, double c0, double kappa1, double kappa2, double z0);

    [[nodiscard]] double value(double z) const;
    [[nodiscard]] double d1(double z) const;
    [[nodiscard]] double d2(double z) const;
    /// theta^iota in closed form.
    [[nodiscard]] WeightSpec pow(double iota) const;
    /// int_Z^inf theta dz; +inf when divergent.
    [[nodiscard]] double tail_integral(double Z) const;
    [[nodiscard]] GraphWeight graph_weight() const;
    [[nodiscard]] std::string name() const;
};

/// Common report shape {check, params, values, verdict}.
struct AuditReport {
    std::string check;
    std::vector<std::pair<std::string, double>> params;
    std::vector<std::pair<std::string, double>> values;
    bool pass = false;
    std::string verdict;

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] double value(const std::string& key) const;
};

/// Finiteness of sum int sqrt(gamma) T dz (analytic tail beyond the grid) and
/// boundedness of (z|theta''| + sqrt(z)|theta'|)/theta, stable under refinement and 2x range.
AuditReport hypothesis_gamma_s_check(const WeightSpec& theta, const MetricGraph& g, const EdgeCoefficientTable& coeffs);

/// sup_{z > R} theta(z) on an R ladder; passes iff non-increasing and the last value is below tol * the first.
AuditReport vartheta_decay_check(const WeightSpec& theta, const std::vector<double>& R_ladder = {1, 10, 100, 1e3, 1e4},
                                 double tol = 1e-3);

/// Tail density h on (R, inf).
struct TailDensity {
    enum class Form { Power, Exp, Custom };
    Form form = Form::Power;
    /// Power: c (z + z0)^-p.  Exp: c exp(-a z).
    double c = 1.0, p = 1.5, a = 1.0, z0 = 0.0;
    std::function<double(double)> custom;

    static TailDensity power(double c, double p, double z0 = 0.0);
    static TailDensity exponential(double c, double a);
    static TailDensity from(std::function<double(double)> h);
    /// h = theta * T_inf for a weight on an edge with asymptotic period T_inf.
    static TailDensity from_weight(const WeightSpec& theta, double T_inf);

    [[nodiscard]] double operator()(double z) const;
    /// int_r^inf h dz; throws AuditError on divergence.
    [[nodiscard]] double tail(double r) const;
    /// int_a^b h dz and int_a^b z h dz.
    [[nodiscard]] double mass(double a, double b) const;
    [[nodiscard]] double first_moment(double a, double b) const;
};

class AuditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NoncompactCondition {
    std::vector<double> r;
    std::vector<double> tail;
    std::vector<double> ramp_moment;
    std::vector<bool> holds;
    [[nodiscard]] bool all() const;
};

/// int_r^inf h dz > rho int_{r-eps}^r z h dz at every ladder point.
NoncompactCondition noncompact_condition_check(const TailDensity& h, double eps, double rho, const std::vector<double>& r_ladder);

/// Cubic smoothstep ramp: 0 below r - eps, 1 above r, |phi'| <= 1.5/eps.
double smoothstep_ramp(double z, double r, double eps);
double smoothstep_ramp_derivative(double z, double r, double eps);

struct WitnessSequence {
    TailDensity h;
    double eps = 1.0, rho = 0.1, R = 10.0;
    /// 1.5 / eps.
    double M_eps = 1.5;
    std::vector<double> r;
    std::vector<double> K;
    /// Tabulation grid; xi_n is constant K_n beyond z_max.
    std::vector<double> z;
    double z_max = 0.0;

    [[nodiscard]] std::size_t size() const { return r.size(); }
    [[nodiscard]] double xi(std::size_t n, double z) const;
    [[nodiscard]] double dxi(std::size_t n, double z) const;
    /// int_R^inf xi_n^2 h dz.
    [[nodiscard]] double mass(std::size_t n) const;
    /// int_R^inf (xi_n^2 + z xi_n'^2) h dz.
    [[nodiscard]] double f_norm2(std::size_t n) const;
    /// (1 + 1/rho) + M_eps^2 / rho.
    [[nodiscard]] double f_norm2_bound() const;
    /// int (xi_n - xi_m)^2 h dz.
    [[nodiscard]] double distance2(std::size_t n, std::size_t m) const;
    /// 2 - 2 sqrt(tail(r_m)/tail(r_n)) for r_n < r_m.
    [[nodiscard]] double distance2_bound(std::size_t n, std::size_t m) const;
    [[nodiscard]] bool ramps_disjoint() const;
};

/// Radii r_{n+1} = 16 r_n from r_1 = R + eps, tabulated to z_max = zmax_factor * r_{n_max}.
WitnessSequence build_witness_sequence(const TailDensity& h, double eps, double rho, std::size_t n_max, double R,
                                       std::size_t ramp_cells = 64, double zmax_factor = 16.0);

/// Half line [0, z_max] with radial coefficients alpha = 4 pi z, T = pi, gridded to resolve the witness ramps.
std::pair<MetricGraph, EdgeCoefficientTable> witness_graph(const WitnessSequence& seq, double refine = 1.0);

/// Graph function with a constant continuation beyond the truncated end of the unbounded edge.
struct TailedFunction {
    GraphFunction f;
    double tail_value = 0.0;
};

std::vector<TailedFunction> witness_functions(const WitnessSequence& seq, const GraphPtr& g);

/// Maps the sequence onto the graph, measures W^{1,2} norms with weight theta^iota and pairwise H distances
/// with weight theta; "non-compactness witnessed" iff max W <= B and min distance >= c > 0.
AuditReport witness_audit(const WitnessSequence& seq, const GraphPtr& g, const EdgeCoefficientTable& coeffs,
                          const WeightSpec& theta, double iota = 1.0);

/// H_theta and W^{1,2}_weight norms including the analytic tail beyond the grid.
double tailed_norm_H2(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& theta);
double tailed_norm_W2(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& weight);
/// int_{z > R} f^2 T theta dz on the unbounded edge (plus the tail).
double tail_mass(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& theta, double R);

struct EscapeRow {
    double R = 0.0;
    double tail_mass = 0.0;
    double bound = 0.0;
};

struct EscapeReport {
    std::vector<EscapeRow> rows;
    bool dominated = false;
    bool vanishing = false;
    AuditReport report;
};

/// The family is normalized in W^{1,2}_{sqrt(theta)}; tail mass in H_theta against (sup W^2) sup_{z>=R} sqrt(theta).
EscapeReport compactness_escape_audit(const WeightSpec& theta, std::vector<TailedFunction> family,
                                      const EdgeCoefficientTable& coeffs, const std::vector<double>& R_ladder,
                                      double vanish_tol = 1e-3);

}  // namespace fwg
