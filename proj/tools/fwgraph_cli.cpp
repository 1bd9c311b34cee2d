#include "fwgraph/scenarios.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace {

int cmd_list() {
    std::cout << std::left << std::setw(32) << "scenario" << std::setw(11) << "criterion" << "reproduces\n";
    for (const auto& s : fwg::scenario_registry())
        std::cout << std::setw(32) << s.name << std::setw(11) << s.criterion << s.anchor << '\n';
    return 0;
}

int cmd_validate(const std::string& path) {
    const fwg::Config cfg = fwg::Config::load(path);
    const auto errors = fwg::validate_config(cfg);
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    if (!errors.empty()) return 2;
    std::cout << path << ": ok (" << cfg.string("scenario") << ")\n";
    return 0;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<unsigned> workers,
            std::optional<std::string> out) {
    const fwg::Config cfg = fwg::Config::load(path);
    const auto errors = fwg::validate_config(cfg);
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    if (!errors.empty()) return 2;
    const fwg::RunOptions opts = fwg::resolve_options(cfg, seed, workers, out);
    const fwg::ScenarioResult res = fwg::run_scenario(cfg, opts);
    std::cout << res.scenario << " -> " << opts.out_dir << '\n';
    for (const auto& [k, v] : res.metrics) std::cout << "  " << std::left << std::setw(40) << k << std::setprecision(8) << v << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fwgraph: stochastic PDEs on metric graphs"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;

    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config, "config file")->required();
    run->add_option("--seed", seed, "root seed (overrides the config)");
    run->add_option("--workers", workers, "worker threads (overrides the config)");
    run->add_option("--out", out, "output directory (overrides the config)");

    auto* list = app.add_subcommand("list", "list bundled scenarios");
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config, "config file")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*list) return cmd_list();
        if (*validate) return cmd_validate(config);
        return cmd_run(config, seed, workers, out);
    } catch (const fwg::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
