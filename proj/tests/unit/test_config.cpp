#include "fwgraph/config.hpp"
#include "fwgraph/scenarios.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

using namespace fwg;
namespace fs = std::filesystem;

TEST_CASE("documents parse into dotted keys", "[config]") {
    const Config c = Config::parse(R"(scenario = "x"  # trailing comment
[spde]
dt = 1_000e-5
T = 2
flags = ["a", "b#c"]
[rate]
ladder = [0.1, 0.01]
importance = true
)");
    CHECK(c.string("scenario") == "x");
    CHECK(c.number("spde.dt") == 0.01);
    CHECK(c.count("spde.T", 0) == 2);
    CHECK(c.numbers("rate.ladder") == std::vector<double>{0.1, 0.01});
    CHECK(c.boolean("rate.importance", false));
    CHECK(c.number("rate.missing", 4.0) == 4.0);
    CHECK(c.line_of("rate.ladder") == 7);
    CHECK(c.numeric_section("spde") == std::map<std::string, double>{{"T", 2.0}, {"dt", 0.01}});
}

TEST_CASE("parse errors name the line", "[config]") {
    auto message = [](const std::string& text) {
        try {
            (void)Config::parse(text, "doc");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("a = 1\nb 2\n") == "doc:2: expected 'key = value'");
    CHECK(message("a = 1\na = 2\n") == "doc:2: duplicate key 'a'");
    CHECK(message("[s\n") == "doc:1: unterminated section header");
    CHECK(message("x = \"open\n") == "doc:1: field 'x': unterminated string");
    CHECK(message("x = 1.5.2\n") == "doc:1: field 'x': expected a number, got '1.5.2'");
    CHECK(message("x = [1, \"a\"]\n").find("doc:1") == 0);
}

TEST_CASE("typed accessors reject the wrong type", "[config]") {
    const Config c = Config::parse("a = \"s\"\nn = 2.5\n", "doc");
    CHECK_THROWS_WITH(c.number("a"), "doc:1: field 'a' must be a number");
    CHECK_THROWS_WITH(c.count("n", 0), "doc:2: field 'n' must be a nonnegative integer");
    CHECK_THROWS_WITH(c.number("zz"), "doc: missing required field 'zz'");
}

TEST_CASE("scenario registry covers every criterion once", "[config]") {
    std::set<std::string> names;
    std::set<int> criteria;
    for (const auto& s : scenario_registry()) {
        CHECK(names.insert(s.name).second);
        CHECK(criteria.insert(s.criterion).second);
        CHECK_FALSE(s.anchor.empty());
    }
    CHECK(criteria.size() == 13);
    CHECK(*criteria.begin() == 1);
    CHECK(*criteria.rbegin() == 13);
    CHECK_THROWS_AS(find_scenario("nope"), ConfigError);
}

TEST_CASE("bundled configs validate and name their scenario", "[config]") {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(FWGRAPH_CONFIG_DIR)) {
        if (entry.path().extension() != ".toml") continue;
        const Config c = Config::load(entry.path().string());
        INFO(entry.path());
        CHECK(validate_config(c).empty());
        CHECK(c.string("scenario") == entry.path().stem().string());
        ++n;
    }
    CHECK(n == scenario_registry().size());
}

TEST_CASE("missing fields are reported by name", "[config]") {
    const Config c = Config::parse("scenario = \"rate_optimizer\"\n", "doc");
    const auto errors = validate_config(c);
    REQUIRE_FALSE(errors.empty());
    CHECK(errors.front().rfind("doc: missing required field '", 0) == 0);
    CHECK(validate_config(Config::parse("x = 1\n", "doc")) == std::vector<std::string>{"doc: missing required field 'scenario'"});
}

TEST_CASE("sha256 digests", "[config]") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("runs are reproducible byte for byte", "[config][property]") {
    const Config c = Config::load(std::string(FWGRAPH_CONFIG_DIR) + "/generator_structure.toml");
    const fs::path root = fs::temp_directory_path() / "fwgraph_unit_determinism";
    fs::remove_all(root);
    std::vector<nlohmann::json> manifests;
    for (const char* sub : {"a", "b"}) {
        RunOptions o = resolve_options(c, 11, 1, (root / sub).string());
        (void)run_scenario(c, o);
        std::ifstream f(root / sub / "manifest.json");
        manifests.push_back(nlohmann::json::parse(f));
    }
    CHECK(manifests[0]["seed"] == 11);
    CHECK(manifests[0]["config_sha256"] == sha256_hex(c.text()));
    REQUIRE(manifests[0]["outputs"].size() == manifests[1]["outputs"].size());
    for (std::size_t i = 0; i < manifests[0]["outputs"].size(); ++i) {
        const auto& a = manifests[0]["outputs"][i];
        const auto& b = manifests[1]["outputs"][i];
        CHECK(a["file"] == b["file"]);
        if (a["file"] != "summary.json") CHECK(a["sha256"] == b["sha256"]);
    }
    fs::remove_all(root);
}
