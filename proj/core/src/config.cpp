#include "fwgraph/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fwg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
    return k.find("..") == std::string::npos;
}

struct LineError {
    std::string what;
};

std::string parse_string(const std::string& s) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') throw LineError{"unterminated string"};
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && i + 2 < s.size()) {
            const char n = s[++i];
            out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
        } else if (s[i] == '"') {
            throw LineError{"unexpected quote inside string"};
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

double parse_number(const std::string& s) {
    std::string t;
    for (char c : s)
        if (c != '_') t.push_back(c);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw LineError{"expected a number, got '" + s + "'"};
    }
    if (used != t.size()) throw LineError{"expected a number, got '" + s + "'"};
    return v;
}

std::vector<std::string> split_array(const std::string& body) {
    std::vector<std::string> items;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
        if (c == ',' && !quoted) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw LineError{"unterminated string in array"};
    if (!trim(cur).empty()) items.push_back(trim(cur));
    for (const auto& it : items)
        if (it.empty()) throw LineError{"empty array element"};
    return items;
}

ConfigValue parse_value(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) throw LineError{"missing value"};
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '"') return parse_string(s);
    if (s.front() == '[') {
        if (s.back() != ']') throw LineError{"unterminated array"};
        const auto items = split_array(s.substr(1, s.size() - 2));
        if (items.empty()) return std::vector<double>{};
        if (items.front().front() == '"') {
            std::vector<std::string> out;
            for (const auto& it : items) {
                if (it.front() != '"') throw LineError{"mixed array element types"};
                out.push_back(parse_string(it));
            }
            return out;
        }
        std::vector<double> out;
        for (const auto& it : items) out.push_back(parse_number(it));
        return out;
    }
    return parse_number(s);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
    Config cfg;
    cfg.text_ = text;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail("unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_key(section)) fail("invalid section name '" + section + "'");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        const std::string local = trim(s.substr(0, eq));
        if (!valid_key(local)) fail("invalid key '" + local + "'");
        const std::string key = section.empty() ? local : section + "." + local;
        if (cfg.values_.count(key)) fail("duplicate key '" + key + "'");
        try {
            cfg.values_[key] = parse_value(s.substr(eq + 1));
        } catch (const LineError& e) {
            fail("field '" + key + "': " + e.what);
        }
        cfg.lines_[key] = lineno;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> k;
    for (const auto& [key, v] : values_) k.push_back(key);
    return k;
}

const ConfigValue& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(source_ + ": missing required field '" + key + "'");
    return it->second;
}

void Config::type_error(const std::string& key, const std::string& expected) const {
    const int l = line_of(key);
    throw ConfigError(source_ + (l > 0 ? ":" + std::to_string(l) : std::string()) + ": field '" + key + "' must be " + expected);
}

int Config::line_of(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
}

double Config::number(const std::string& key) const {
    const auto& v = get(key);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    type_error(key, "a number");
}

double Config::number(const std::string& key, double def) const { return has(key) ? number(key) : def; }

std::string Config::string(const std::string& key) const {
    const auto& v = get(key);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* d = std::get_if<double>(&v)) {
        std::ostringstream os;
        os << *d;
        return os.str();
    }
    type_error(key, "a string");
}

std::string Config::string(const std::string& key, const std::string& def) const { return has(key) ? string(key) : def; }

bool Config::boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    if (const auto* b = std::get_if<bool>(&get(key))) return *b;
    type_error(key, "true or false");
}

std::vector<double> Config::numbers(const std::string& key) const {
    const auto& v = get(key);
    if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
    if (const auto* d = std::get_if<double>(&v)) return {*d};
    type_error(key, "an array of numbers");
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& def) const {
    return has(key) ? numbers(key) : def;
}

std::size_t Config::count(const std::string& key, std::size_t def) const {
    if (!has(key)) return def;
    const double v = number(key);
    if (!(v >= 0.0) || v != std::floor(v)) type_error(key, "a nonnegative integer");
    return static_cast<std::size_t>(v);
}

std::map<std::string, double> Config::numeric_section(const std::string& prefix) const {
    std::map<std::string, double> out;
    const std::string p = prefix + ".";
    for (const auto& [k, v] : values_)
        if (k.rfind(p, 0) == 0)
            if (const auto* d = std::get_if<double>(&v)) out[k.substr(p.size())] = *d;
    return out;
}

void Config::set(const std::string& key, ConfigValue value) {
    values_[key] = std::move(value);
    lines_.erase(key);
}

std::vector<std::string> check_schema(const Config& cfg, const std::vector<SchemaField>& fields) {
    std::vector<std::string> errors;
    for (const auto& f : fields) {
        if (!cfg.has(f.key)) {
            errors.push_back(cfg.source() + ": missing required field '" + f.key + "'");
            continue;
        }
        try {
            switch (f.kind) {
                case SchemaField::Kind::Number: (void)cfg.number(f.key); break;
                case SchemaField::Kind::String: (void)cfg.string(f.key); break;
                case SchemaField::Kind::Bool: (void)cfg.boolean(f.key, false); break;
                case SchemaField::Kind::Numbers: (void)cfg.numbers(f.key); break;
                case SchemaField::Kind::Any: break;
            }
        } catch (const ConfigError& e) {
            errors.emplace_back(e.what());
        }
    }
    return errors;
}

}  // namespace fwg
