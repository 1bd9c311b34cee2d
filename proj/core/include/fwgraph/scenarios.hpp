#pragma once

// =============================================================================
// fwgraph - bundled experiment scenarios, run manifests and checksums
// =============================================================================

#include "fwgraph/config.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fwg {

struct RunOptions {
    std::uint64_t seed = 20240611;
    unsigned workers = 1;
    std::string out_dir = "out";
};

struct ScenarioResult {
    std::string scenario;
    std::vector<std::pair<std::string, double>> metrics;
    /// Files written under the output directory (relative names).
    std::vector<std::string> outputs;

    [[nodiscard]] double metric(const std::string& name) const;
    [[nodiscard]] bool has_metric(const std::string& name) const;
    void add(const std::string& name, double value) { metrics.emplace_back(name, value); }
};

struct ScenarioInfo {
    std::string name;
    /// What the run reproduces.
    std::string anchor;
    /// Acceptance criterion number exercised by the scenario.
    int criterion = 0;
    std::vector<SchemaField> schema;
    std::function<ScenarioResult(const Config&, const RunOptions&)> run;
};

const std::vector<ScenarioInfo>& scenario_registry();
/// Throws ConfigError for unknown names.
const ScenarioInfo& find_scenario(const std::string& name);

/// Field-level problems of a config; empty when it can be run.
std::vector<std::string> validate_config(const Config& cfg);

/// Seed, workers and output directory from the config unless overridden.
RunOptions resolve_options(const Config& cfg, std::optional<std::uint64_t> seed, std::optional<unsigned> workers,
                           std::optional<std::string> out_dir);

/// Validates, runs, writes summary.json and manifest.json.
ScenarioResult run_scenario(const Config& cfg, const RunOptions& opts);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace fwg
