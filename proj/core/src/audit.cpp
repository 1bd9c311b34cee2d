#include "fwgraph/audit.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fwg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gauss20(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

double numeric_tail(const std::function<double(double)>& f, double a) {
    try {
        boost::math::quadrature::exp_sinh<double> q;
        double err = 0.0;
        const double v = q.integrate([&](double t) { return f(a + t); }, 0.0, kInf, 1e-10, &err);
        if (!std::isfinite(v) || err > 1e-6 * std::max(1.0, std::abs(v))) return kInf;
        return v;
    } catch (const std::exception&) {
        return kInf;
    }
}

std::vector<double> geometric_samples(double lo, double hi, std::size_t n) {
    std::vector<double> z(n);
    const double r = std::log(hi / lo);
    for (std::size_t i = 0; i < n; ++i) z[i] = lo * std::exp(r * static_cast<double>(i) / static_cast<double>(n - 1));
    return z;
}

}  // namespace

// =============================================================================
// WeightSpec
// =============================================================================

WeightSpec WeightSpec::power(double c0, double kappa1, double z0) {
    WeightSpec w;
    w.form = Form::Power;
    w.c0 = c0;
    w.kappa1 = kappa1;
    w.z0 = z0;
    return w;
}

WeightSpec WeightSpec::exp_sqrt(double c0, double kappa2, double z0) {
    WeightSpec w;
    w.form = Form::ExpSqrt;
    w.c0 = c0;
    w.kappa2 = kappa2;
    w.z0 = z0;
    return w;
}

WeightSpec WeightSpec::constant(double c0) {
    WeightSpec w;
    w.form = Form::Constant;
    w.c0 = c0;
    return w;
}

WeightSpec WeightSpec::custom(std::function<double(double)> value, std::function<double(double)> d1,
                              std::function<double(double)> d2) {
    WeightSpec w;
    w.form = Form::Custom;
    w.custom_value = std::move(value);
    w.custom_d1 = std::move(d1);
    w.custom_d2 = std::move(d2);
    return w;
}

WeightSpec WeightSpec::from_name(const std::string& form, double c0, double kappa1, double kappa2, double z0) {
    if (form == "power") return power(c0, kappa1, z0);
    if (form == "exp_sqrt") return exp_sqrt(c0, kappa2, z0);
    if (form == "constant") return constant(c0);
    throw AuditError("unknown weight form '" + form + "' (expected power, exp_sqrt or constant)");
}

double WeightSpec::value(double z) const {
    z = std::max(z, 0.0);
    switch (form) {
        case Form::Power: return c0 * std::pow(z + z0, -kappa1);
        case Form::ExpSqrt: return c0 * std::exp(-kappa2 * (std::sqrt(z + z0) - std::sqrt(z0)));
        case Form::Constant: return c0;
        case Form::Custom: return custom_value(z);
    }
    return 0.0;
}

double WeightSpec::d1(double z) const {
    z = std::max(z, 0.0);
    switch (form) {
        case Form::Power: return -kappa1 * value(z) / (z + z0);
        case Form::ExpSqrt: return -kappa2 * value(z) / (2.0 * std::sqrt(z + z0));
        case Form::Constant: return 0.0;
        case Form::Custom:
            if (!custom_d1) throw AuditError("custom weight has no first derivative");
            return custom_d1(z);
    }
    return 0.0;
}

double WeightSpec::d2(double z) const {
    z = std::max(z, 0.0);
    switch (form) {
        case Form::Power: return kappa1 * (kappa1 + 1.0) * value(z) / ((z + z0) * (z + z0));
        case Form::ExpSqrt: {
            const double w = std::sqrt(z + z0);
            return value(z) * (kappa2 * kappa2 / (4.0 * w * w) + kappa2 / (4.0 * w * w * w));
        }
        case Form::Constant: return 0.0;
        case Form::Custom:
            if (!custom_d2) throw AuditError("custom weight has no second derivative");
            return custom_d2(z);
    }
    return 0.0;
}

WeightSpec WeightSpec::pow(double iota) const {
    WeightSpec w = *this;
    switch (form) {
        case Form::Power:
            w.c0 = std::pow(c0, iota);
            w.kappa1 = kappa1 * iota;
            break;
        case Form::ExpSqrt:
            w.c0 = std::pow(c0, iota);
            w.kappa2 = kappa2 * iota;
            break;
        case Form::Constant: w.c0 = std::pow(c0, iota); break;
        case Form::Custom: {
            const WeightSpec base = *this;
            w.custom_value = [base, iota](double z) { return std::pow(base.value(z), iota); };
            w.custom_d1 = [base, iota](double z) { return iota * std::pow(base.value(z), iota - 1.0) * base.d1(z); };
            w.custom_d2 = [base, iota](double z) {
                const double v = base.value(z);
                return iota * (iota - 1.0) * std::pow(v, iota - 2.0) * base.d1(z) * base.d1(z) +
                       iota * std::pow(v, iota - 1.0) * base.d2(z);
            };
            break;
        }
    }
    return w;
}

double WeightSpec::tail_integral(double Z) const {
    Z = std::max(Z, 0.0);
    switch (form) {
        case Form::Power:
            if (kappa1 <= 1.0) return kInf;
            return c0 * std::pow(Z + z0, 1.0 - kappa1) / (kappa1 - 1.0);
        case Form::ExpSqrt: {
            if (kappa2 <= 0.0) return kInf;
            const double W = std::sqrt(Z + z0);
            return 2.0 * c0 * std::exp(-kappa2 * (W - std::sqrt(z0))) * (W / kappa2 + 1.0 / (kappa2 * kappa2));
        }
        case Form::Constant: return c0 > 0.0 ? kInf : 0.0;
        case Form::Custom: return numeric_tail(custom_value, Z);
    }
    return kInf;
}

GraphWeight WeightSpec::graph_weight() const {
    if (form == Form::Constant) return GraphWeight::constant(c0);
    const WeightSpec self = *this;
    return GraphWeight::from([self](double z, int) { return self.value(z); }, [self](double z, int) { return self.d1(z); },
                             std::isfinite(value(0.0)));
}

std::string WeightSpec::name() const {
    switch (form) {
        case Form::Power: return "power";
        case Form::ExpSqrt: return "exp_sqrt";
        case Form::Constant: return "constant";
        case Form::Custom: return "custom";
    }
    return "custom";
}

// =============================================================================
// Reports
// =============================================================================

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string AuditReport::to_json() const {
    nlohmann::json j;
    j["check"] = check;
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : params) j["params"][k] = number(v);
    j["values"] = nlohmann::json::array();
    for (const auto& [k, v] : values) j["values"].push_back({{"name", k}, {"value", number(v)}});
    j["verdict"] = verdict;
    j["pass"] = pass;
    return j.dump(2);
}

double AuditReport::value(const std::string& key) const {
    for (const auto& [k, v] : values)
        if (k == key) return v;
    throw AuditError("report '" + check + "' has no value '" + key + "'");
}

// =============================================================================
// Weight hypotheses
// =============================================================================

namespace {

/// sum_k int f(z) T_k(z) dz with T quadratic through node/mid/node; each cell split into `split` parts.
double integrate_with_T(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const std::function<double(double)>& f,
                        int split) {
    double s = 0.0;
    for (const auto& e : g.edges()) {
        const auto& c = coeffs.edges[static_cast<std::size_t>(e.id)];
        for (std::size_t i = 0; i < e.cells(); ++i) {
            const double a = e.grid[i], b = e.grid[i + 1];
            const double T0 = c.T[i], Tm = c.T_mid[i], T1 = c.T[i + 1];
            if (!std::isfinite(T0) || !std::isfinite(T1) || !std::isfinite(Tm)) continue;
            auto T = [&](double z) {
                const double t = (z - a) / (b - a);
                return T0 * (1 - t) * (1 - 2 * t) + 4 * Tm * t * (1 - t) + T1 * t * (2 * t - 1);
            };
            for (int p = 0; p < split; ++p) {
                const double lo = a + (b - a) * p / split, hi = a + (b - a) * (p + 1) / split;
                s += boost::math::quadrature::gauss<double, 7>::integrate([&](double z) { return f(z) * T(z); }, lo, hi);
            }
        }
    }
    return s;
}

double unbounded_tail(const MetricGraph& g, const EdgeCoefficientTable& coeffs, const WeightSpec& w) {
    const int k = g.unbounded_edge();
    if (k < 0) return 0.0;
    const auto& e = g.edge(k);
    const double T_last = coeffs.edges[static_cast<std::size_t>(k)].T.back();
    return T_last * w.tail_integral(e.grid.back());
}

double decay_ratio_sup(const WeightSpec& theta, double Z, std::size_t n) {
    double s = 0.0;
    for (const double z : geometric_samples(1e-6, Z, n)) {
        const double v = (z * std::abs(theta.d2(z)) + std::sqrt(z) * std::abs(theta.d1(z))) / theta.value(z);
        s = std::max(s, std::isfinite(v) ? v : kInf);
    }
    return s;
}

}  // namespace

AuditReport hypothesis_gamma_s_check(const WeightSpec& theta, const MetricGraph& g, const EdgeCoefficientTable& coeffs) {
    AuditReport r;
    r.check = "hypothesis_gamma_s";
    r.params = {{"c0", theta.c0}, {"kappa1", theta.kappa1}, {"kappa2", theta.kappa2}, {"z0", theta.z0}};
    const WeightSpec root = theta.pow(0.5);
    auto sq = [&](double z) { return root.value(z); };
    const double grid_part = integrate_with_T(g, coeffs, sq, 1);
    const double grid_fine = integrate_with_T(g, coeffs, sq, 2);
    const double tail = unbounded_tail(g, coeffs, root);
    const double integral = grid_part + tail;
    const bool integral_ok = std::isfinite(integral) && std::abs(grid_fine - grid_part) <= 1e-3 * std::abs(grid_fine) + 1e-12;

    double Z = 1.0;
    for (const auto& e : g.edges()) Z = std::max(Z, e.grid.back());
    const double sup = decay_ratio_sup(theta, Z, 2000);
    const double sup_fine = decay_ratio_sup(theta, Z, 4000);
    const double sup_long = decay_ratio_sup(theta, 2.0 * Z, 4000);
    const double sup_ref = std::max(sup_fine, sup_long);
    const bool decay_ok = std::isfinite(sup_ref) && std::abs(sup_ref - sup) <= 0.05 * sup + 1e-12;

    r.values = {{"sqrt_gamma_T_integral", integral}, {"grid_part", grid_part},   {"tail_part", tail},
                {"grid_part_refined", grid_fine},     {"derivative_sup", sup},    {"derivative_sup_refined", sup_fine},
                {"derivative_sup_extended", sup_long}};
    r.pass = integral_ok && decay_ok;
    r.verdict = r.pass ? "PASS" : (!integral_ok ? "FAIL: sqrt(gamma) T not integrable" : "FAIL: derivative ratio unbounded");
    return r;
}

AuditReport vartheta_decay_check(const WeightSpec& theta, const std::vector<double>& R_ladder, double tol) {
    AuditReport r;
    r.check = "vartheta_decay";
    r.params = {{"c0", theta.c0}, {"kappa1", theta.kappa1}, {"kappa2", theta.kappa2}, {"z0", theta.z0}, {"tol", tol}};
    std::vector<double> sups;
    for (const double R : R_ladder) {
        double s = 0.0;
        for (const double z : geometric_samples(R, 1e3 * R, 400)) s = std::max(s, theta.value(z));
        sups.push_back(s);
        r.values.emplace_back("sup_R=" + std::to_string(R), s);
    }
    bool nonincreasing = true;
    for (std::size_t i = 1; i < sups.size(); ++i)
        if (sups[i] > sups[i - 1] * (1 + 1e-12)) nonincreasing = false;
    r.pass = !sups.empty() && nonincreasing && sups.back() < tol * sups.front();
    r.verdict = r.pass ? "PASS" : "FAIL: sup_{z>R} theta does not vanish";
    return r;
}

// =============================================================================
// Tail densities and the non-compactness condition
// =============================================================================

TailDensity TailDensity::power(double c, double p, double z0) {
    TailDensity h;
    h.form = Form::Power;
    h.c = c;
    h.p = p;
    h.z0 = z0;
    return h;
}

TailDensity TailDensity::exponential(double c, double a) {
    TailDensity h;
    h.form = Form::Exp;
    h.c = c;
    h.a = a;
    return h;
}

TailDensity TailDensity::from(std::function<double(double)> f) {
    TailDensity h;
    h.form = Form::Custom;
    h.custom = std::move(f);
    return h;
}

TailDensity TailDensity::from_weight(const WeightSpec& theta, double T_inf) {
    if (theta.form == WeightSpec::Form::Power) return power(theta.c0 * T_inf, theta.kappa1, theta.z0);
    return from([theta, T_inf](double z) { return T_inf * theta.value(z); });
}

double TailDensity::operator()(double z) const {
    switch (form) {
        case Form::Power: return c * std::pow(z + z0, -p);
        case Form::Exp: return c * std::exp(-a * z);
        case Form::Custom: return custom(z);
    }
    return 0.0;
}

namespace {

double power_antiderivative_diff(double a, double b, double z0, double q) {
    if (std::abs(q - 1.0) < 1e-14) return std::log((b + z0) / (a + z0));
    return (std::pow(b + z0, 1.0 - q) - std::pow(a + z0, 1.0 - q)) / (1.0 - q);
}

}  // namespace

double TailDensity::tail(double r) const {
    switch (form) {
        case Form::Power:
            if (p <= 1.0) throw AuditError("divergent tail: power density with exponent <= 1");
            return c * std::pow(r + z0, 1.0 - p) / (p - 1.0);
        case Form::Exp:
            if (a <= 0.0) throw AuditError("divergent tail: nonpositive exponential rate");
            return c * std::exp(-a * r) / a;
        case Form::Custom: {
            const double v = numeric_tail(custom, r);
            if (!std::isfinite(v)) throw AuditError("divergent tail of the custom density at r=" + std::to_string(r));
            return v;
        }
    }
    return 0.0;
}

double TailDensity::mass(double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    switch (form) {
        case Form::Power: return c * power_antiderivative_diff(lo, hi, z0, p);
        case Form::Exp: return c * (std::exp(-a * lo) - std::exp(-a * hi)) / a;
        case Form::Custom:
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(custom, lo, hi, 10, 1e-12);
    }
    return 0.0;
}

double TailDensity::first_moment(double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    switch (form) {
        case Form::Power:
            return c * (power_antiderivative_diff(lo, hi, z0, p - 1.0) - z0 * power_antiderivative_diff(lo, hi, z0, p));
        case Form::Exp: {
            auto G = [&](double z) { return -c * std::exp(-a * z) * (z / a + 1.0 / (a * a)); };
            return G(hi) - G(lo);
        }
        case Form::Custom:
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double z) { return z * custom(z); }, lo, hi, 10, 1e-12);
    }
    return 0.0;
}

bool NoncompactCondition::all() const {
    return !holds.empty() && std::all_of(holds.begin(), holds.end(), [](bool b) { return b; });
}

NoncompactCondition noncompact_condition_check(const TailDensity& h, double eps, double rho, const std::vector<double>& r_ladder) {
    NoncompactCondition out;
    for (const double r : r_ladder) {
        const double t = h.tail(r);
        const double m = h.first_moment(r - eps, r);
        out.r.push_back(r);
        out.tail.push_back(t);
        out.ramp_moment.push_back(m);
        out.holds.push_back(t > rho * m);
    }
    return out;
}

double smoothstep_ramp(double z, double r, double eps) {
    const double t = std::clamp((z - (r - eps)) / eps, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double smoothstep_ramp_derivative(double z, double r, double eps) {
    const double t = (z - (r - eps)) / eps;
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 6.0 * t * (1.0 - t) / eps;
}

// =============================================================================
// Witness sequence
// =============================================================================

double WitnessSequence::xi(std::size_t n, double zz) const {
    if (zz < R) return 0.0;
    return K[n] * smoothstep_ramp(zz, r[n], eps);
}

double WitnessSequence::dxi(std::size_t n, double zz) const {
    if (zz < R) return 0.0;
    return K[n] * smoothstep_ramp_derivative(zz, r[n], eps);
}

double WitnessSequence::mass(std::size_t n) const {
    const double ramp = gauss20([&](double zz) { return xi(n, zz) * xi(n, zz) * h(zz); }, r[n] - eps, r[n]);
    return ramp + K[n] * K[n] * h.tail(r[n]);
}

double WitnessSequence::f_norm2(std::size_t n) const {
    const double ramp = gauss20([&](double zz) { return zz * dxi(n, zz) * dxi(n, zz) * h(zz); }, r[n] - eps, r[n]);
    return mass(n) + ramp;
}

double WitnessSequence::f_norm2_bound() const { return (1.0 + 1.0 / rho) + M_eps * M_eps / rho; }

double WitnessSequence::distance2(std::size_t n, std::size_t m) const {
    if (n == m) return 0.0;
    if (r[n] > r[m]) std::swap(n, m);
    const double Kn = K[n], Km = K[m];
    const double A = gauss20([&](double zz) { return xi(n, zz) * xi(n, zz) * h(zz); }, r[n] - eps, r[n]);
    const double B = Kn * Kn * h.mass(r[n], r[m] - eps);
    const double C = gauss20([&](double zz) { const double d = Kn - xi(m, zz); return d * d * h(zz); }, r[m] - eps, r[m]);
    const double D = (Kn - Km) * (Kn - Km) * h.tail(r[m]);
    return A + B + C + D;
}

double WitnessSequence::distance2_bound(std::size_t n, std::size_t m) const {
    if (r[n] > r[m]) std::swap(n, m);
    return 2.0 - 2.0 * K[n] / K[m];
}

bool WitnessSequence::ramps_disjoint() const {
    for (std::size_t n = 1; n < r.size(); ++n)
        if (!(r[n] - eps > r[n - 1])) return false;
    return true;
}

namespace {

std::vector<double> witness_grid(const WitnessSequence& seq, std::size_t ramp_cells, double refine) {
    std::vector<double> z;
    const auto n0 = static_cast<std::size_t>(std::ceil(32.0 * refine));
    for (std::size_t i = 0; i < n0; ++i) z.push_back(seq.R * static_cast<double>(i) / static_cast<double>(n0));
    const auto nr = static_cast<std::size_t>(std::ceil(static_cast<double>(ramp_cells) * refine));
    const double h0 = seq.eps / static_cast<double>(nr);
    const double q = 1.0 + 0.05 / refine;
    auto gap = [&](double a, double b) {
        double x = a, h = h0;
        while (x + h < b - 0.5 * h) {
            z.push_back(x);
            x += h;
            h *= q;
        }
        z.push_back(x);
    };
    double x = seq.R;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        gap(x, seq.r[n] - seq.eps);
        for (std::size_t i = 0; i < nr; ++i) z.push_back(seq.r[n] - seq.eps + seq.eps * static_cast<double>(i) / static_cast<double>(nr));
        x = seq.r[n];
    }
    gap(x, seq.z_max);
    z.push_back(seq.z_max);
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end(), [](double a, double b) { return std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(b)); }),
            z.end());
    return z;
}

}  // namespace

WitnessSequence build_witness_sequence(const TailDensity& h, double eps, double rho, std::size_t n_max, double R,
                                       std::size_t ramp_cells, double zmax_factor) {
    if (n_max < 2) throw AuditError("witness sequence needs at least two members");
    if (!(eps > 0.0) || !(rho > 0.0)) throw AuditError("witness sequence needs eps > 0 and rho > 0");
    WitnessSequence s;
    s.h = h;
    s.eps = eps;
    s.rho = rho;
    s.R = R;
    s.M_eps = 1.5 / eps;
    double r = R + eps;
    for (std::size_t n = 0; n < n_max; ++n, r *= 16.0) s.r.push_back(r);
    const NoncompactCondition cond = noncompact_condition_check(h, eps, rho, s.r);
    for (std::size_t n = 0; n < n_max; ++n)
        if (!cond.holds[n]) throw AuditError("non-compactness condition fails at r_n=" + std::to_string(s.r[n]));
    for (const double rn : s.r) s.K.push_back(1.0 / std::sqrt(h.tail(rn)));
    s.z_max = zmax_factor * s.r.back();
    s.z = witness_grid(s, ramp_cells, 1.0);
    return s;
}

std::pair<MetricGraph, EdgeCoefficientTable> witness_graph(const WitnessSequence& seq, double refine) {
    const std::size_t ramp_cells = 64;
    std::vector<Vertex> v{{0, VertexKind::Minimum, 0.0, {}}, {1, VertexKind::Infinity, kInf, {}}};
    Edge e;
    e.id = 0;
    e.a = 0.0;
    e.b = kInf;
    e.v_lo = 0;
    e.v_hi = 1;
    e.grid = refine == 1.0 ? seq.z : witness_grid(seq, ramp_cells, refine);
    MetricGraph g(std::move(v), {e});
    auto coeffs = EdgeCoefficientTable::from_functions(g, [](double z, int) { return 4.0 * M_PI * z; },
                                                       [](double, int) { return M_PI; });
    return {std::move(g), std::move(coeffs)};
}

std::vector<TailedFunction> witness_functions(const WitnessSequence& seq, const GraphPtr& g) {
    std::vector<TailedFunction> out;
    for (std::size_t n = 0; n < seq.size(); ++n)
        out.push_back({GraphFunction::from(g, [&](double z, int) { return seq.xi(n, z); }), seq.K[n]});
    return out;
}

// =============================================================================
// Tailed norms
// =============================================================================

namespace {

double tail_term(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& w, double from) {
    if (f.tail_value == 0.0) return 0.0;
    const MetricGraph& g = *f.f.graph;
    const int k = g.unbounded_edge();
    if (k < 0) return 0.0;
    const double zmax = g.edge(k).grid.back();
    const double T_last = coeffs.edges[static_cast<std::size_t>(k)].T.back();
    return f.tail_value * f.tail_value * T_last * w.tail_integral(std::max(from, zmax));
}

}  // namespace

double tailed_norm_H2(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& theta) {
    const double n = norm_H(f.f, coeffs, theta.graph_weight());
    return n * n + tail_term(f, coeffs, theta, 0.0);
}

double tailed_norm_W2(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& weight) {
    const double n = norm_W12(f.f, coeffs, weight.graph_weight());
    return n * n + tail_term(f, coeffs, weight, 0.0);
}

double tail_mass(const TailedFunction& f, const EdgeCoefficientTable& coeffs, const WeightSpec& theta, double R) {
    const MetricGraph& g = *f.f.graph;
    double s = 0.0;
    for (const auto& e : g.edges()) {
        const auto& nodes = g.edge_nodes(e.id);
        const auto& c = coeffs.edges[static_cast<std::size_t>(e.id)];
        for (std::size_t i = 0; i < e.cells(); ++i) {
            const double a = e.grid[i], b = e.grid[i + 1];
            if (b <= R) continue;
            const double lo = std::max(a, R);
            const double f0 = f.f.values[nodes[i]], f1 = f.f.values[nodes[i + 1]];
            auto integrand = [&](double z) {
                const double t = (z - a) / (b - a);
                const double fv = f0 + t * (f1 - f0);
                const double T = c.T[i] + t * (c.T[i + 1] - c.T[i]);
                return fv * fv * T * theta.value(z);
            };
            s += boost::math::quadrature::gauss<double, 7>::integrate(integrand, lo, b);
        }
    }
    return s + tail_term(f, coeffs, theta, R);
}

// =============================================================================
// Witness and escape audits
// =============================================================================

AuditReport witness_audit(const WitnessSequence& seq, const GraphPtr& g, const EdgeCoefficientTable& coeffs,
                          const WeightSpec& theta, double iota) {
    const int k = g->unbounded_edge();
    if (k < 0) throw AuditError("witness audit needs an unbounded edge");
    const auto& e = g->edge(k);
    const auto& c = coeffs.edges[static_cast<std::size_t>(k)];
    if (e.grid.back() < seq.r.back()) throw AuditError("graph truncation lies below the last witness radius");
    // equivalence constants alpha ~ z and T ~ 1 beyond R
    double a_lo = kInf, a_hi = 0.0, t_lo = kInf, t_hi = 0.0;
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
        if (e.grid[i] < seq.R) continue;
        const double ratio = c.alpha[i] / (e.grid[i] * c.T[i]);
        a_lo = std::min(a_lo, ratio);
        a_hi = std::max(a_hi, ratio);
        t_lo = std::min(t_lo, c.T[i]);
        t_hi = std::max(t_hi, c.T[i]);
    }
    if (!(a_lo > 0.0) || a_hi / a_lo > 4.0 || !(t_lo > 0.0) || t_hi / t_lo > 4.0)
        throw AuditError("equivalence constants not in the asymptotic regime beyond R");

    const WeightSpec w_weight = theta.pow(iota);
    const auto fns = witness_functions(seq, g);
    const double B2 = std::max(1.0, a_hi) * seq.f_norm2_bound();
    double w_max = 0.0, d_min = kInf, c2 = kInf, zero_min = kInf;
    for (std::size_t n = 0; n < fns.size(); ++n) {
        w_max = std::max(w_max, tailed_norm_W2(fns[n], coeffs, w_weight));
        zero_min = std::min(zero_min, tailed_norm_H2(fns[n], coeffs, theta));
        for (std::size_t m = n + 1; m < fns.size(); ++m) {
            TailedFunction diff{GraphFunction(g, fns[n].f.values - fns[m].f.values), fns[n].tail_value - fns[m].tail_value};
            d_min = std::min(d_min, tailed_norm_H2(diff, coeffs, theta));
            c2 = std::min(c2, seq.distance2_bound(n, m));
        }
    }
    AuditReport r;
    r.check = "witness";
    r.params = {{"eps", seq.eps}, {"rho", seq.rho}, {"R", seq.R}, {"n", static_cast<double>(seq.size())},
                {"iota", iota}, {"kappa1", theta.kappa1}, {"z_max", e.grid.back()}};
    const double B = std::sqrt(B2), cmin = std::sqrt(std::max(0.0, c2));
    r.values = {{"max_W_norm", std::sqrt(w_max)}, {"B", B},
                {"min_pairwise_distance", std::sqrt(d_min)}, {"c", cmin},
                {"min_distance_to_zero", std::sqrt(zero_min)}, {"alpha_over_zT_max", a_hi}};
    r.pass = std::isfinite(w_max) && std::sqrt(w_max) <= B && cmin > 0.0 && std::sqrt(d_min) >= cmin * (1.0 - 1e-6);
    r.verdict = r.pass ? "non-compactness witnessed" : "no witness";
    return r;
}

EscapeReport compactness_escape_audit(const WeightSpec& theta, std::vector<TailedFunction> family,
                                      const EdgeCoefficientTable& coeffs, const std::vector<double>& R_ladder,
                                      double vanish_tol) {
    const WeightSpec root = theta.pow(0.5);
    double w_sup = 0.0;
    for (auto& f : family) {
        const double n2 = tailed_norm_W2(f, coeffs, root);
        if (!std::isfinite(n2)) throw AuditError("family member has infinite sqrt(gamma) Sobolev norm");
        if (n2 <= 0.0) continue;
        const double s = 1.0 / std::sqrt(n2);
        f.f.values *= s;
        f.tail_value *= s;
        w_sup = std::max(w_sup, 1.0);
    }
    EscapeReport out;
    out.dominated = true;
    for (const double R : R_ladder) {
        EscapeRow row;
        row.R = R;
        for (const auto& f : family) row.tail_mass = std::max(row.tail_mass, tail_mass(f, coeffs, theta, R));
        double sup_root = 0.0;
        for (const double z : geometric_samples(R, 1e6 * R, 600)) sup_root = std::max(sup_root, root.value(z));
        row.bound = w_sup * sup_root;
        if (row.tail_mass > row.bound * (1.0 + 1e-9) + 1e-300) out.dominated = false;
        out.rows.push_back(row);
    }
    out.vanishing = !out.rows.empty() && out.rows.front().bound > 0.0 &&
                    out.rows.back().bound <= vanish_tol * out.rows.front().bound;
    AuditReport& r = out.report;
    r.check = "compactness_escape";
    r.params = {{"c0", theta.c0}, {"kappa1", theta.kappa1}, {"kappa2", theta.kappa2}, {"vanish_tol", vanish_tol}};
    for (const auto& row : out.rows) {
        r.values.emplace_back("tail_mass_R=" + std::to_string(row.R), row.tail_mass);
        r.values.emplace_back("bound_R=" + std::to_string(row.R), row.bound);
    }
    r.pass = out.dominated && out.vanishing;
    r.verdict = r.pass ? "escape mass vanishes" : (out.dominated ? "escape bound does not vanish" : "bound violated");
    return out;
}

}  // namespace fwg
