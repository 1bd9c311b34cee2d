#include "fwgraph/skeleton.hpp"
#include "fwgraph/spde.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GraphPtr interval(std::size_t cells) { return std::make_shared<const MetricGraph>(interval_graph(0.0, 1.0, cells)); }

NoiseBasis cosine_modes(const GraphPtr& g, int J) {
    std::vector<GraphFunction> modes;
    for (int j = 0; j < J; ++j)
        modes.push_back(GraphFunction::from(g, [j](double z, int) { return std::cos(j * M_PI * z) / (j + 1.0); }));
    return graph_basis(std::move(modes));
}

SpdeContext context(const std::string& reaction, std::map<std::string, double> params = {}, std::size_t cells = 16,
                    double dt = 0.02) {
    auto g = interval(cells);
    return SpdeContext(assemble(g, EdgeCoefficientTable::constant(*g, 1.0, 1.0)), make_reaction(reaction, params),
                       cosine_modes(g, 3), dt, 1.0);
}

SpdeConfig config(const SpdeContext& ctx, double eps, double T = 0.5) {
    SpdeConfig c;
    c.epsilon = eps;
    c.dt = ctx.dt();
    c.T = T;
    c.u0 = GraphFunction::from(ctx.graph(), [](double z, int) { return std::cos(M_PI * z); });
    c.max_snapshots = 1000;
    return c;
}

}  // namespace

TEST_CASE("reaction registry and Lipschitz constants", "[spde]") {
    for (const auto& name : reaction_names()) CHECK_NOTHROW(make_reaction(name));
    CHECK_THROWS_AS(make_reaction("cubic"), SolverError);
    CHECK_THROWS_AS(make_reaction("sin", {{"g_amp", 1.5}}), SolverError);
    const ReactionCheck c = reaction_lipschitz_check(make_reaction("sin", {{"b_amp", 2.0}, {"g_amp", 0.5}}));
    CHECK(c.pass);
    CHECK_THAT(c.lip_b, WithinRel(2.0, 1e-3));
    CHECK_THAT(c.lip_g, WithinRel(0.5, 1e-3));
}

TEST_CASE("zero noise reproduces the deterministic solve", "[spde]") {
    const SpdeContext ctx = context("sin", {{"b_amp", 1.0}, {"g_amp", 0.5}});
    const SpdeConfig cfg = config(ctx, 0.0);
    const PathResult det = solve_deterministic(ctx, cfg.u0, cfg.T, cfg.max_snapshots);
    const PathResult sto = solve_spde(ctx, cfg, 1, 0);
    CHECK((det.terminal - sto.terminal).cwiseAbs().maxCoeff() == 0.0);
    CHECK(det.states.size() == cfg.steps() + 1);
    CHECK(det.sup_norm_H >= ctx.norm(cfg.u0.values) - 1e-12);
}

TEST_CASE("paths are reproducible from (seed, sample)", "[spde][property]") {
    const SpdeContext ctx = context("sin", {{"b_amp", 1.0}, {"g_amp", 0.5}});
    const SpdeConfig cfg = config(ctx, 0.1);
    const PathResult a = solve_spde(ctx, cfg, 42, 3);
    const PathResult b = solve_spde(ctx, cfg, 42, 3);
    const PathResult c = solve_spde(ctx, cfg, 42, 4);
    CHECK(a.terminal == b.terminal);
    CHECK((a.terminal - c.terminal).norm() > 1e-6);
}

TEST_CASE("additive noise gives the closed-form endpoint variance", "[spde]") {
    const SpdeContext ctx = context("linear", {{"c", -0.5}});
    SpdeConfig cfg = config(ctx, 0.04);
    cfg.u0 = GraphFunction(ctx.graph());
    const GraphFunction psi = GraphFunction::from(ctx.graph(), [](double z, int) { return 1.0 + z; });
    const LqOracle o = lq_oracle(ctx, psi, cfg.T);
    const int n = 4000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = ctx.pairing(solve_spde(ctx, cfg, 9, static_cast<std::uint64_t>(i)).terminal, psi.values);
        s1 += x;
        s2 += x * x;
    }
    const double var = s2 / n - (s1 / n) * (s1 / n);
    const double expect = cfg.epsilon * o.sigma2;
    CHECK(std::abs(s1 / n) < 5.0 * std::sqrt(expect / n));
    CHECK(std::abs(var - expect) < 5.0 * expect * std::sqrt(2.0 / n));
    // scheme variance against the continuous-time flow
    CHECK_THAT(o.sigma2, WithinRel(o.sigma2_continuous, 0.05));
}

TEST_CASE("deviation paths rescale the difference", "[spde]") {
    const SpdeContext ctx = context("sin", {{"b_amp", 1.0}, {"g_amp", 0.5}});
    const SpdeConfig cfg = config(ctx, 0.01);
    const PathResult u0 = solve_deterministic(ctx, cfg.u0, cfg.T, cfg.max_snapshots);
    const PathResult ue = solve_spde(ctx, cfg, 5, 0);
    const double lambda = 3.0;
    const PathResult X = deviation_path(ue, u0, cfg.epsilon, lambda);
    for (std::size_t i = 0; i < X.states.size(); ++i) {
        const Eigen::VectorXd back = u0.states[i] + std::sqrt(cfg.epsilon) * lambda * X.states[i];
        CHECK((back - ue.states[i]).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(deviation_path(u0, u0, cfg.epsilon, lambda).terminal.norm() == 0.0);
    CHECK(sup_distance(ctx, u0, u0) == 0.0);
    CHECK_THROWS_AS(deviation_path(ue, u0, 0.0, lambda), SolverError);
}

TEST_CASE("for linear drift the deviation equation matches the rescaled difference", "[spde]") {
    const SpdeContext ctx = context("linear", {{"c", 0.3}});
    const SpdeConfig cfg = config(ctx, 0.01);
    PathResult u0 = solve_deterministic(ctx, cfg.u0, cfg.T, cfg.steps() + 1);
    REQUIRE(u0.states.size() == cfg.steps() + 1);
    const double lambda = 2.0;
    const PathResult M = solve_mdp_controlled(ctx, cfg, lambda, Control{}, u0, 8, 1);
    const PathResult X = deviation_path(solve_spde(ctx, cfg, 8, 1), u0, cfg.epsilon, lambda);
    CHECK((M.terminal - X.terminal).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("control energy and lambda maps", "[spde]") {
    Control c = Control::zero(50, 3, 0.02);
    CHECK(control_energy(c) == 0.0);
    c.phi.setConstant(2.0);
    CHECK_THAT(control_energy(c), WithinRel(0.5 * 4.0 * 3.0 * 1.0, 1e-12));
    CHECK_THAT(parse_lambda("eps^-1/4")(1e-4), WithinRel(10.0, 1e-12));
    CHECK_THAT(parse_lambda("eps^-0.5")(0.01), WithinRel(10.0, 1e-12));
    CHECK_THAT(parse_lambda("log")(std::exp(-3.0)), WithinRel(3.0, 1e-12));
    CHECK(parse_lambda("7")(0.1) == 7.0);
    CHECK_THROWS_AS(parse_lambda("eps^2x"), SolverError);
}
