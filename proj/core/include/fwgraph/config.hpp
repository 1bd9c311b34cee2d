#pragma once

// =============================================================================
// fwgraph - key/value experiment documents with dotted sections
// =============================================================================

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fwg {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One scalar or array value; arrays are homogeneous.
using ConfigValue = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

/// Parsed document.
///
/// Syntax: `[section]` headers, `key = value` lines with dotted keys, `#`
/// comments, values as numbers, "strings", true/false or [arrays].
class Config {
public:
    static Config parse(const std::string& text, const std::string& source = "<string>");
    static Config load(const std::string& path);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }
    [[nodiscard]] std::vector<std::string> keys() const;

    /// Typed accessors; the fallback overloads return `def` when the key is absent.
    [[nodiscard]] double number(const std::string& key) const;
    [[nodiscard]] double number(const std::string& key, double def) const;
    [[nodiscard]] std::string string(const std::string& key) const;
    [[nodiscard]] std::string string(const std::string& key, const std::string& def) const;
    [[nodiscard]] bool boolean(const std::string& key, bool def) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& key) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& key, const std::vector<double>& def) const;
    [[nodiscard]] std::size_t count(const std::string& key, std::size_t def) const;

    /// Numeric keys below `prefix.` with the prefix stripped (reaction params etc.).
    [[nodiscard]] std::map<std::string, double> numeric_section(const std::string& prefix) const;

    void set(const std::string& key, ConfigValue value);

    /// Raw document text (hash input).
    [[nodiscard]] const std::string& text() const { return text_; }
    [[nodiscard]] const std::string& source() const { return source_; }
    /// Line the key was defined on, 0 if set programmatically.
    [[nodiscard]] int line_of(const std::string& key) const;

private:
    [[nodiscard]] const ConfigValue& get(const std::string& key) const;
    [[noreturn]] void type_error(const std::string& key, const std::string& expected) const;

    std::map<std::string, ConfigValue> values_;
    std::map<std::string, int> lines_;
    std::string text_;
    std::string source_;
};

/// Required keys and the type each must have.
struct SchemaField {
    std::string key;
    enum class Kind { Number, String, Bool, Numbers, Any } kind = Kind::Any;
};

/// Field-level errors ("<source>: missing required field 'rate.target'"); empty when valid.
std::vector<std::string> check_schema(const Config& cfg, const std::vector<SchemaField>& fields);

}  // namespace fwg
