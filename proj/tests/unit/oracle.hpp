#pragma once

#include <json.hpp>

#include <fstream>

// Frozen reference values written by tests/oracles/generate.py.
inline const nlohmann::json& oracle() {
    static const nlohmann::json j = [] {
        std::ifstream f(FWGRAPH_ORACLE_FILE);
        return nlohmann::json::parse(f);
    }();
    return j;
}
