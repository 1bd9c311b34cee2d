#include "fwgraph/audit.hpp"
#include "oracle.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fwg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::pair<MetricGraph, EdgeCoefficientTable> radial(double z_max, std::size_t cells) {
    MetricGraph g = half_line_graph(z_max, cells);
    EdgeCoefficientTable c = EdgeCoefficientTable::from_functions(g, [](double z, int) { return 4.0 * M_PI * z; },
                                                                  [](double, int) { return M_PI; });
    return {std::move(g), std::move(c)};
}

struct Witness {
    WitnessSequence seq;
    GraphPtr g;
    EdgeCoefficientTable coeffs;
};

Witness witness(const WeightSpec& theta) {
    Witness w;
    w.seq = build_witness_sequence(TailDensity::from_weight(theta, M_PI), 1.0, 0.1, 4, 10.0);
    auto [g, c] = witness_graph(w.seq);
    w.g = std::make_shared<const MetricGraph>(std::move(g));
    w.coeffs = std::move(c);
    return w;
}

}  // namespace

TEST_CASE("closed-form weight tails", "[audit]") {
    const WeightSpec p = WeightSpec::power(1.0, 2.5, 1.0);
    const WeightSpec e = WeightSpec::exp_sqrt(1.0, 1.0, 1.0);
    for (const char* Z : {"0.0", "3.0", "50.0"}) {
        const double z = std::stod(Z);
        CHECK_THAT(p.tail_integral(z), WithinRel(oracle()["power_tail_integral"][Z].get<double>(), 1e-8));
        CHECK_THAT(e.tail_integral(z), WithinRel(oracle()["exp_sqrt_tail_integral"][Z].get<double>(), 1e-8));
    }
    CHECK(std::isinf(WeightSpec::power(1.0, 0.9).tail_integral(0.0)));
    CHECK(std::isinf(WeightSpec::constant().tail_integral(0.0)));
}

TEST_CASE("weight derivatives and powers", "[audit][property]") {
    for (const WeightSpec& w : {WeightSpec::power(2.0, 2.5, 1.0), WeightSpec::exp_sqrt(1.5, 0.7, 1.0)}) {
        const WeightSpec half = w.pow(0.5);
        for (const double z : {0.1, 0.7, 5.0, 80.0}) {
            const double h = 1e-5 * (1.0 + z);
            CHECK_THAT(w.d1(z), WithinRel((w.value(z + h) - w.value(z - h)) / (2.0 * h), 1e-6));
            CHECK_THAT(w.d2(z), WithinRel((w.d1(z + h) - w.d1(z - h)) / (2.0 * h), 1e-5));
            CHECK_THAT(half.value(z), WithinRel(std::sqrt(w.value(z)), 1e-12));
        }
    }
}

TEST_CASE("integrability of the square-root weight", "[audit]") {
    const auto [g, c] = radial(100.0, 400);
    CHECK(hypothesis_gamma_s_check(WeightSpec::power(1.0, 2.5), g, c).pass);
    CHECK(hypothesis_gamma_s_check(WeightSpec::exp_sqrt(1.0, 1.0), g, c).pass);
    // sqrt of z^-1.5 is not integrable at infinity
    CHECK_FALSE(hypothesis_gamma_s_check(WeightSpec::power(1.0, 1.5), g, c).pass);
    CHECK_FALSE(hypothesis_gamma_s_check(WeightSpec::constant(), g, c).pass);
}

TEST_CASE("weight decay along a radius ladder", "[audit]") {
    CHECK(vartheta_decay_check(WeightSpec::power(1.0, 2.5)).pass);
    CHECK(vartheta_decay_check(WeightSpec::exp_sqrt(1.0, 1.0)).pass);
    CHECK_FALSE(vartheta_decay_check(WeightSpec::constant()).pass);
    const AuditReport r = vartheta_decay_check(WeightSpec::power(1.0, 2.5));
    CHECK(r.check == "vartheta_decay");
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["check"] == "vartheta_decay");
    CHECK(j["verdict"].get<std::string>() == r.verdict);
    CHECK(j["pass"].get<bool>() == r.pass);
}

TEST_CASE("non-compactness condition against quadrature", "[audit]") {
    const auto& pw = oracle()["noncompact_pow15"];
    const TailDensity h = TailDensity::power(1.0, 1.5);
    std::vector<double> ladder;
    for (std::size_t i = 0; i < pw["r"].size(); ++i) {
        const double r = pw["r"][i].get<double>();
        ladder.push_back(r);
        CHECK_THAT(h.tail(r), WithinRel(pw["tail"][i].get<double>(), 1e-8));
        CHECK_THAT(h.first_moment(r - 1.0, r), WithinRel(pw["moment"][i].get<double>(), 1e-8));
    }
    const NoncompactCondition c = noncompact_condition_check(h, 1.0, 1.0, ladder);
    CHECK(c.all());

    const auto& ex = oracle()["noncompact_exp"];
    const TailDensity he = TailDensity::exponential(1.0, 1.0);
    std::vector<double> er;
    for (std::size_t i = 0; i < ex["r"].size(); ++i) {
        const double r = ex["r"][i].get<double>();
        er.push_back(r);
        CHECK_THAT(he.tail(r), WithinRel(ex["tail"][i].get<double>(), 1e-8));
        CHECK_THAT(he.first_moment(r - 1.0, r), WithinRel(ex["moment"][i].get<double>(), 1e-8));
    }
    // exponential tails are too thin for the ramp moment
    CHECK_FALSE(noncompact_condition_check(he, 1.0, 1.0, er).all());
    CHECK_THROWS_AS(TailDensity::power(1.0, 0.8).tail(10.0), AuditError);
}

TEST_CASE("smoothstep ramp", "[audit]") {
    CHECK(smoothstep_ramp(3.0, 5.0, 1.0) == 0.0);
    CHECK(smoothstep_ramp(6.0, 5.0, 1.0) == 1.0);
    CHECK_THAT(smoothstep_ramp(4.5, 5.0, 1.0), WithinAbs(0.5, 1e-15));
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) worst = std::max(worst, std::abs(smoothstep_ramp_derivative(4.0 + i * 1e-3, 5.0, 1.0)));
    CHECK(worst <= 1.5 + 1e-12);
    CHECK_THAT(worst, WithinRel(1.5, 1e-6));
}

TEST_CASE("witness sequence bounds", "[audit][property]") {
    const Witness w = witness(WeightSpec::power(1.0, 1.5));
    REQUIRE(w.seq.size() == 4);
    CHECK(w.seq.ramps_disjoint());
    for (std::size_t n = 0; n + 1 < w.seq.size(); ++n) CHECK_THAT(w.seq.r[n + 1] / w.seq.r[n], WithinRel(16.0, 1e-12));
    for (std::size_t n = 0; n < w.seq.size(); ++n) {
        CHECK(w.seq.f_norm2(n) <= w.seq.f_norm2_bound() * (1.0 + 1e-9));
        // K_n normalizes the flat part; the ramp only adds mass
        CHECK(w.seq.mass(n) >= 1.0 - 1e-9);
        CHECK(w.seq.mass(n) <= w.seq.h.tail(w.seq.r[n] - w.seq.eps) / w.seq.h.tail(w.seq.r[n]) * (1.0 + 1e-9));
        for (std::size_t m = n + 1; m < w.seq.size(); ++m) CHECK(w.seq.distance2(n, m) >= w.seq.distance2_bound(n, m) * (1.0 - 1e-9));
    }
}

TEST_CASE("witness audit separates the two weight scalings", "[audit]") {
    const WeightSpec theta = WeightSpec::power(1.0, 1.5);
    const Witness w = witness(theta);
    const AuditReport full = witness_audit(w.seq, w.g, w.coeffs, theta, 1.0);
    CHECK(full.pass);
    CHECK(full.value("max_W_norm") <= full.value("B"));
    CHECK(full.value("min_pairwise_distance") >= 1e-3);
    CHECK_FALSE(witness_audit(w.seq, w.g, w.coeffs, theta, 0.5).pass);
}

TEST_CASE("escaping mass under compact and non-compact weights", "[audit]") {
    const std::vector<double> R{10, 100, 1000, 10000};
    const WeightSpec theta = WeightSpec::power(1.0, 2.5);
    const Witness w = witness(theta);
    const EscapeReport e = compactness_escape_audit(theta, witness_functions(w.seq, w.g), w.coeffs, R);
    CHECK(e.dominated);
    CHECK(e.vanishing);
    for (std::size_t i = 0; i + 1 < e.rows.size(); ++i) CHECK(e.rows[i + 1].bound <= e.rows[i].bound);

    const WeightSpec flat = WeightSpec::constant();
    const Witness wf = witness(WeightSpec::power(1.0, 1.5));
    // constant tails have no finite norm under a flat weight
    CHECK_THROWS_AS(compactness_escape_audit(flat, witness_functions(wf.seq, wf.g), wf.coeffs, R), AuditError);
}
