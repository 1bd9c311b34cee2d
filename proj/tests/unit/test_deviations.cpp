#include "fwgraph/deviations.hpp"
#include "oracle.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Gaussian {
    GraphPtr g;
    std::unique_ptr<SpdeContext> ctx;
    GraphFunction psi;
    double base = 0.0;
    double sigma = 0.0;
    ProcessModel model;

    explicit Gaussian(double eps) {
        g = std::make_shared<const MetricGraph>(interval_graph(0.0, 1.0, 16));
        std::vector<GraphFunction> modes{GraphFunction::from(g, [](double, int) { return 1.0; }),
                                         GraphFunction::from(g, [](double z, int) { return 0.5 * std::cos(M_PI * z); })};
        ctx = std::make_unique<SpdeContext>(assemble(g, EdgeCoefficientTable::constant(*g, 1.0, 1.0)),
                                            make_reaction("linear", {{"c", -0.5}}), graph_basis(std::move(modes)), 0.05,
                                            1.0);
        psi = GraphFunction::from(g, [](double z, int) { return 1.0 + z; });
        SpdeConfig cfg;
        cfg.epsilon = eps;
        cfg.dt = 0.05;
        cfg.T = 1.0;
        cfg.u0 = GraphFunction::from(g, [](double z, int) { return std::cos(M_PI * z); });
        model = ProcessModel::make(*ctx, cfg, Regime::LDP);
        base = ctx->pairing(model.base.terminal, psi.values);
        sigma = std::sqrt(lq_oracle(*ctx, psi, cfg.T).sigma2);
    }

    [[nodiscard]] RareEvent event(double x) const {
        RareEvent ev;
        ev.psi = psi;
        ev.r = base + x * std::sqrt(model.cfg.epsilon) * sigma;
        return ev;
    }

    [[nodiscard]] Control tilt(double r) const {
        EndpointProblem p;
        p.psi = psi;
        p.r = r;
        p.u0 = model.cfg.u0;
        p.T = model.cfg.T;
        return minimize_rate_endpoint(p, *ctx, RateMode::LqOracle).phi;
    }
};

}  // namespace

TEST_CASE("moderate deviation scale check", "[deviations]") {
    const std::vector<double> ladder{1e-1, 1e-2, 1e-3};
    CHECK(mdp_scale_check(parse_lambda("eps^-1/4"), ladder).pass());
    CHECK(mdp_scale_check(parse_lambda("log"), ladder).pass());
    const MdpScaleReport half = mdp_scale_check(parse_lambda("eps^-1/2"), ladder);
    CHECK(half.lambda_to_infinity);
    CHECK_FALSE(half.sqrt_eps_lambda_to_zero);
    CHECK_FALSE(mdp_scale_check(parse_lambda("3"), ladder).pass());
    // the ladder is extended by two decades
    CHECK(mdp_scale_check(parse_lambda("log"), ladder).epsilon.back() <= 1e-5 * (1.0 + 1e-9));
}

TEST_CASE("slope fits", "[deviations]") {
    const SlopeFit f = fit_slope({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    CHECK_THAT(f.slope, WithinAbs(2.0, 1e-14));
    CHECK_THAT(f.intercept, WithinAbs(1.0, 1e-14));
    CHECK_THAT(f.r2, WithinAbs(1.0, 1e-14));
    CHECK_THROWS_AS(fit_slope({0.0, 1.0}, {0.0, 1.0}), SolverError);
    CHECK_THROWS_AS(fit_slope({0.0, 1.0, NAN}, {0.0, 1.0, 2.0}), SolverError);
}

TEST_CASE("impossible and certain events", "[deviations]") {
    const Gaussian s(0.01);
    const MCEstimate never = estimate_probability(s.event(1e6), s.model, 200, 1);
    CHECK(never.p == 0.0);
    CHECK(never.zero_hits);
    const MCEstimate always = estimate_probability(s.event(-1e6), s.model, 200, 1);
    CHECK(always.p == 1.0);
    CHECK(always.se == 0.0);
}

TEST_CASE("vanilla estimate of a one-sigma exceedance", "[deviations]") {
    const Gaussian s(0.01);
    const double p = oracle()["gaussian_tail_x1"].get<double>();
    const MCEstimate e = estimate_probability(s.event(1.0), s.model, 4000, 3);
    CHECK(std::abs(e.p - p) < 4.0 * e.se);
    CHECK_THAT(e.se, WithinRel(std::sqrt(p * (1 - p) / 4000.0), 0.05));
}

TEST_CASE("zero tilt importance sampling equals vanilla sampling", "[deviations][property]") {
    const Gaussian s(0.01);
    const RareEvent ev = s.event(1.0);
    const MCEstimate v = estimate_probability(ev, s.model, 500, 4);
    const MCEstimate is = girsanov_is_estimate(ev, s.model, Control::zero(20, 2, 0.05), 500, 4);
    CHECK(is.p == v.p);
    CHECK(is.mean_weight == 1.0);
}

TEST_CASE("tilted sampling resolves a one-in-a-million event", "[deviations]") {
    const Gaussian s(0.01);
    const RareEvent ev = s.event(oracle()["gaussian_tail_1e-6_x"].get<double>());
    const MCEstimate e = girsanov_is_estimate(ev, s.model, s.tilt(ev.r), 2000, 5);
    CHECK(e.importance_sampled);
    CHECK(e.se / e.p < 0.1);
    CHECK(std::abs(e.p - 1e-6) < 4.0 * e.se);
}

TEST_CASE("likelihood-ratio weights average to one", "[deviations][property]") {
    const Gaussian s(0.05);
    const RareEvent ev = s.event(1.0);
    const MCEstimate e = girsanov_is_estimate(ev, s.model, s.tilt(ev.r), 4000, 6);
    CHECK(std::abs(e.mean_weight - 1.0) < 4.0 * e.weight_se);
}

TEST_CASE("results do not depend on the worker count", "[deviations][property]") {
    const Gaussian s(0.01);
    const RareEvent ev = s.event(1.0);
    const MCEstimate a = estimate_probability(ev, s.model, 300, 7, 1);
    const MCEstimate b = estimate_probability(ev, s.model, 300, 7, 3);
    CHECK(a.p == b.p);
    CHECK(a.hits == b.hits);
    std::vector<std::size_t> seen(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { seen[i] += 1; });
    for (const auto v : seen) CHECK(v == 1);
}

TEST_CASE("moderate deviation variance matches the linear response", "[deviations]") {
    const Gaussian s(0.01);
    ProcessModel m = ProcessModel::make(*s.ctx, s.model.cfg, Regime::MDP);
    const auto rows = mdp_variance_check(s.psi, m, {1e-2, 1e-3}, parse_lambda("eps^-1/4"), 3000, 8);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) CHECK(std::abs(r.variance - s.sigma * s.sigma) < 4.0 * r.variance_se);
}
