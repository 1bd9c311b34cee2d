// Runs every bundled scenario and judges its metrics; one line per criterion.

#include "fwgraph/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace {

struct Check {
    std::string what;
    bool ok;
};

struct Criterion {
    int id;
    std::string scenario;
    std::function<std::vector<Check>(const fwg::ScenarioResult&)> judge;
};

Check at_most(const fwg::ScenarioResult& r, const std::string& m, double tol) {
    const double v = r.metric(m);
    std::ostringstream os;
    os << m << "=" << std::setprecision(4) << v << " <= " << tol;
    return {os.str(), v <= tol};
}

Check at_least(const fwg::ScenarioResult& r, const std::string& m, double tol) {
    const double v = r.metric(m);
    std::ostringstream os;
    os << m << "=" << std::setprecision(4) << v << " >= " << tol;
    return {os.str(), v >= tol};
}

Check within(const fwg::ScenarioResult& r, const std::string& m, double lo, double hi) {
    const double v = r.metric(m);
    std::ostringstream os;
    os << m << "=" << std::setprecision(4) << v << " in [" << lo << "," << hi << "]";
    return {os.str(), v >= lo && v <= hi};
}

Check flag(const fwg::ScenarioResult& r, const std::string& m) {
    return {m + (r.metric(m) == 1.0 ? "=yes" : "=no"), r.metric(m) == 1.0};
}

std::vector<Criterion> criteria() {
    return {
        {1, "radial_coefficients",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "contour_T_max_abs_error", 1e-6),
                                       at_most(r, "contour_alpha_over_z_max_abs_error", 1e-4),
                                       at_most(r, "reeb_T_max_abs_error", 1e-6),
                                       at_most(r, "reeb_alpha_over_z_max_abs_error", 1e-4)};
         }},
        {2, "disk_narrow_coefficients",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "alpha_max_abs_error", 1e-6), at_most(r, "T_max_abs_error", 1e-6)};
         }},
        {3, "generator_structure",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "K_relative_asymmetry", 1e-13), at_most(r, "K_row_sum_defect", 1e-12),
                                       at_least(r, "eigenvalue_order", 1.8), at_least(r, "gluing_residual_order", 1.0)};
         }},
        {4, "semigroup_lq_audit",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "unit_weight_max_ratio", 1.0 + 1e-8), flag(r, "weighted_mesh_stable"),
                                       at_most(r, "weighted_max_ratio", 1e6)};
         }},
        {5, "narrow_rectangle_ldp",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "final_relative_error", 0.15), flag(r, "trend_toward_J")};
         }},
        {6, "rate_optimizer",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "J_relative_error", 0.01), at_most(r, "gradient_error_max", 1e-5)};
         }},
        {7, "radial_mdp",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "final_relative_error", 0.15), at_most(r, "variance_max_z_vs_sigma2", 3.0),
                                       at_most(r, "variance_max_pairwise_z", 3.0)};
         }},
        {8, "yz_error_rate", [](const auto& r) { return std::vector<Check>{within(r, "slope", 0.8, 1.2)}; }},
        {9, "mz_error_rate", [](const auto& r) { return std::vector<Check>{within(r, "slope", 0.3, 0.7)}; }},
        {10, "narrow_multiscale_convergence",
         [](const auto& r) {
             return std::vector<Check>{flag(r, "deterministic_monotone"), at_least(r, "control_refinement_ratio", 3.0),
                                       at_most(r, "control_error_fine", 1e-3)};
         }},
        {11, "semigroup_convergence",
         [](const auto& r) {
             return std::vector<Check>{flag(r, "all_monotone"), at_least(r, "trials", 3.0),
                                       at_least(r, "initial_layer_error_min", 1e-2)};
         }},
        {12, "embedding_dichotomy",
         [](const auto& r) {
             return std::vector<Check>{flag(r, "witness_kappa=1.5"), at_least(r, "min_distance_kappa=1.5", 1e-3),
                                       flag(r, "hypothesis_kappa=2.5"), flag(r, "decay_kappa=2.5"),
                                       flag(r, "escape_vanishing_kappa=2.5"), flag(r, "escape_dominated_kappa=2.5")};
         }},
        {13, "girsanov_weights",
         [](const auto& r) {
             return std::vector<Check>{at_most(r, "weight_z", 3.0), at_most(r, "agreement_z", 3.0)};
         }},
    };
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
    const std::filesystem::path out_root = std::filesystem::temp_directory_path() / "fwgraph_acceptance";

    int failed = 0;
    for (const auto& c : criteria()) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        std::vector<Check> checks;
        std::string error;
        try {
            const fwg::Config cfg = fwg::Config::load(std::string(FWGRAPH_CONFIG_DIR) + "/" + c.scenario + ".toml");
            fwg::RunOptions opts = fwg::resolve_options(cfg, std::nullopt, std::nullopt, (out_root / c.scenario).string());
            checks = c.judge(fwg::run_scenario(cfg, opts));
        } catch (const std::exception& e) {
            error = e.what();
        }
        bool ok = error.empty();
        for (const auto& k : checks) ok = ok && k.ok;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  " << std::left << std::setw(30)
                  << c.scenario << std::right << "  " << std::fixed << std::setprecision(1) << secs << "s" << std::defaultfloat;
        if (!error.empty()) std::cout << "  error: " << error;
        for (const auto& k : checks) std::cout << "  [" << (k.ok ? "ok" : "x") << "] " << k.what;
        std::cout << std::endl;
        if (!ok) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
