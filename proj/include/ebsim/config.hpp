#ifndef EBSIM_CONFIG_HPP
#define EBSIM_CONFIG_HPP

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ebsim/core.hpp"

namespace ebsim {

/// Malformed or inconsistent configuration. line is 0 when unknown.
struct ConfigError : Error {
    ConfigError(int line, const std::string& message)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line{line} {}
    int line = 0;
};

/**
 * Parsed config value.
 *
 * The accepted syntax is a subset of TOML: `[table.path]` headers,
 * `key = value` lines, `#` comments, and values that are basic strings,
 * booleans, integers, floats (including inf and nan) or arrays of those.
 * Arrays may span several lines.
 */
struct ConfigValue {
    enum class Kind { boolean, integer, real, string, array };

    Kind kind = Kind::integer;
    bool b = false;
    std::int64_t i = 0;
    double d = 0.0;
    std::string s;
    std::vector<ConfigValue> items;
    int line = 0;

    bool is_number() const { return kind == Kind::integer || kind == Kind::real; }
    double as_double() const { return kind == Kind::integer ? static_cast<double>(i) : d; }
};

namespace detail {

class ValueParser {
public:
    ValueParser(const std::string& text, int line) : text_{text}, line_{line} {}

    ConfigValue parse_all() {
        ConfigValue v = parse();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected trailing text '" + text_.substr(pos_) + "'");
        }
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(line_, what); }

    void skip_space() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    ConfigValue parse() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("missing value");
        }
        const char c = text_[pos_];
        if (c == '"') {
            return parse_string();
        }
        if (c == '[') {
            return parse_array();
        }
        return parse_scalar();
    }

    ConfigValue parse_string() {
        ConfigValue v;
        v.kind = ConfigValue::Kind::string;
        v.line = line_;
        ++pos_;
        while (true) {
            if (pos_ >= text_.size() || text_[pos_] == '\n') {
                fail("unterminated string");
            }
            const char c = text_[pos_++];
            if (c == '"') {
                return v;
            }
            if (c != '\\') {
                v.s.push_back(c);
                continue;
            }
            if (pos_ >= text_.size()) {
                fail("unterminated string");
            }
            switch (const char e = text_[pos_++]) {
            case 'n': v.s.push_back('\n'); break;
            case 't': v.s.push_back('\t'); break;
            case '"': v.s.push_back('"'); break;
            case '\\': v.s.push_back('\\'); break;
            default: fail(std::string("unsupported escape '\\") + e + "'");
            }
        }
    }

    ConfigValue parse_array() {
        ConfigValue v;
        v.kind = ConfigValue::Kind::array;
        v.line = line_;
        ++pos_;
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ']') {
            ++pos_;
            return v;
        }
        while (true) {
            v.items.push_back(parse());
            skip_space();
            if (pos_ >= text_.size()) {
                fail("unterminated array");
            }
            if (text_[pos_] == ',') {
                ++pos_;
                skip_space();
                if (pos_ < text_.size() && text_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                continue;
            }
            if (text_[pos_] == ']') {
                ++pos_;
                return v;
            }
            fail("expected ',' or ']' in array");
        }
    }

    ConfigValue parse_scalar() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        const std::string tok = text_.substr(start, pos_ - start);
        ConfigValue v;
        v.line = line_;
        if (tok == "true" || tok == "false") {
            v.kind = ConfigValue::Kind::boolean;
            v.b = tok == "true";
            return v;
        }
        if (tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan" || tok == "+nan" || tok == "-nan") {
            v.kind = ConfigValue::Kind::real;
            v.d = tok.find("nan") != std::string::npos ? std::numeric_limits<double>::quiet_NaN()
                                                        : std::numeric_limits<double>::infinity();
            if (tok[0] == '-') {
                v.d = -v.d;
            }
            return v;
        }
        std::string digits;
        for (std::size_t k = 0; k < tok.size(); ++k) {
            if (tok[k] == '_') {
                const bool ok = k > 0 && k + 1 < tok.size() && std::isdigit(static_cast<unsigned char>(tok[k - 1])) &&
                                std::isdigit(static_cast<unsigned char>(tok[k + 1]));
                if (!ok) {
                    fail("invalid value '" + tok + "'");
                }
                continue;
            }
            digits.push_back(tok[k]);
        }
        if (digits.empty()) {
            fail("missing value");
        }
        const bool is_real = digits.find_first_of(".eE") != std::string::npos;
        std::size_t used = 0;
        try {
            if (is_real) {
                v.kind = ConfigValue::Kind::real;
                v.d = std::stod(digits, &used);
            } else {
                v.kind = ConfigValue::Kind::integer;
                v.i = std::stoll(digits, &used);
            }
        } catch (const std::exception&) {
            fail("invalid value '" + tok + "'");
        }
        if (used != digits.size()) {
            fail("invalid value '" + tok + "'");
        }
        return v;
    }

    const std::string& text_;
    int line_;
    std::size_t pos_ = 0;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool valid_key(const std::string& key) {
    if (key.empty()) {
        return false;
    }
    for (const char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
            return false;
        }
    }
    return true;
}

/// Bracket depth of a value fragment, ignoring strings and comments.
inline int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const char c = s[k];
        if (in_string) {
            if (c == '\\') {
                ++k;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            break;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

} // namespace detail

/// Flat view of a config: every leaf keyed by its dotted path.
class ConfigDocument {
public:
    static ConfigDocument parse(const std::string& text) {
        ConfigDocument doc;
        std::istringstream in(text);
        std::string raw;
        std::string prefix;
        std::set<std::string> tables;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            const std::string line = detail::trim(raw);
            if (line.empty() || line[0] == '#') {
                continue;
            }
            if (line[0] == '[') {
                const auto close = line.find(']');
                if (close == std::string::npos) {
                    throw ConfigError(line_no, "unterminated table header");
                }
                const std::string rest = detail::trim(line.substr(close + 1));
                if (!rest.empty() && rest[0] != '#') {
                    throw ConfigError(line_no, "unexpected text after table header");
                }
                const std::string name = detail::trim(line.substr(1, close - 1));
                std::string path;
                std::istringstream parts(name);
                std::string part;
                while (std::getline(parts, part, '.')) {
                    part = detail::trim(part);
                    if (!detail::valid_key(part)) {
                        throw ConfigError(line_no, "invalid table name '" + name + "'");
                    }
                    path += (path.empty() ? "" : ".") + part;
                }
                if (path.empty()) {
                    throw ConfigError(line_no, "invalid table name '" + name + "'");
                }
                if (!tables.insert(path).second || doc.values_.count(path)) {
                    throw ConfigError(line_no, "duplicate table '" + path + "'");
                }
                prefix = path + ".";
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(line_no, "expected 'key = value'");
            }
            const std::string key = detail::trim(line.substr(0, eq));
            if (!detail::valid_key(key)) {
                throw ConfigError(line_no, "invalid key '" + key + "'");
            }
            std::string value_text = line.substr(eq + 1);
            const int start_line = line_no;
            while (detail::bracket_balance(value_text) > 0) {
                if (!std::getline(in, raw)) {
                    throw ConfigError(start_line, "unterminated array");
                }
                ++line_no;
                value_text += "\n" + raw;
            }
            ConfigValue value = detail::ValueParser(value_text, start_line).parse_all();
            const std::string path = prefix + key;
            if (doc.values_.count(path) || tables.count(path)) {
                throw ConfigError(start_line, "duplicate key '" + path + "'");
            }
            doc.values_.emplace(path, std::move(value));
        }
        return doc;
    }

    static ConfigDocument load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw ConfigError(0, "cannot read config file '" + path + "'");
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    void set(const std::string& path, ConfigValue value) { values_[path] = std::move(value); }

    const std::map<std::string, ConfigValue>& values() const { return values_; }

private:
    std::map<std::string, ConfigValue> values_;
};

/**
 * Typed access to a ConfigDocument. Every key read is marked as used;
 * finish() rejects whatever was never read.
 */
class ConfigReader {
public:
    explicit ConfigReader(const ConfigDocument& doc) : doc_{doc} {}

    bool has(const std::string& path) const { return doc_.values().count(path) != 0; }

    const ConfigValue* find(const std::string& path) {
        const auto it = doc_.values().find(path);
        if (it == doc_.values().end()) {
            return nullptr;
        }
        used_.insert(path);
        return &it->second;
    }

    double real(const std::string& path, double fallback) {
        const ConfigValue* v = find(path);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number()) {
            throw ConfigError(v->line, "'" + path + "' must be a number");
        }
        return v->as_double();
    }

    std::int64_t integer(const std::string& path, std::int64_t fallback) {
        const ConfigValue* v = find(path);
        if (v == nullptr) {
            return fallback;
        }
        if (v->kind == ConfigValue::Kind::real && std::isfinite(v->d) && v->d == std::floor(v->d) &&
            std::abs(v->d) < 9.0e18) {
            return static_cast<std::int64_t>(v->d);
        }
        if (v->kind != ConfigValue::Kind::integer) {
            throw ConfigError(v->line, "'" + path + "' must be an integer");
        }
        return v->i;
    }

    std::uint64_t count(const std::string& path, std::uint64_t fallback) {
        const ConfigValue* v = find(path);
        const std::int64_t n = v == nullptr ? static_cast<std::int64_t>(fallback) : integer(path, 0);
        if (n < 0) {
            throw ConfigError(v->line, "'" + path + "' must be non-negative");
        }
        return static_cast<std::uint64_t>(n);
    }

    bool boolean(const std::string& path, bool fallback) {
        const ConfigValue* v = find(path);
        if (v == nullptr) {
            return fallback;
        }
        if (v->kind != ConfigValue::Kind::boolean) {
            throw ConfigError(v->line, "'" + path + "' must be true or false");
        }
        return v->b;
    }

    std::string string(const std::string& path, const std::string& fallback) {
        const ConfigValue* v = find(path);
        if (v == nullptr) {
            return fallback;
        }
        if (v->kind != ConfigValue::Kind::string) {
            throw ConfigError(v->line, "'" + path + "' must be a string");
        }
        return v->s;
    }

    /// One of `choices`; the error lists them all.
    std::string choice(const std::string& path, const std::string& fallback, const std::vector<std::string>& choices) {
        const std::string s = string(path, fallback);
        for (const auto& c : choices) {
            if (c == s) {
                return s;
            }
        }
        std::string all;
        for (const auto& c : choices) {
            all += (all.empty() ? "" : ", ") + c;
        }
        const ConfigValue* v = find(path);
        throw ConfigError(v != nullptr ? v->line : 0, "'" + path + "' = \"" + s + "\" is not one of: " + all);
    }

    std::vector<double> reals(const std::string& path, const std::vector<double>& fallback) {
        const ConfigValue* v = find(path);
        if (v == nullptr) {
            return fallback;
        }
        if (v->kind != ConfigValue::Kind::array) {
            throw ConfigError(v->line, "'" + path + "' must be an array of numbers");
        }
        std::vector<double> out;
        for (const auto& item : v->items) {
            if (!item.is_number()) {
                throw ConfigError(item.line, "'" + path + "' must be an array of numbers");
            }
            out.push_back(item.as_double());
        }
        return out;
    }

    std::vector<std::pair<double, double>> real_pairs(const std::string& path,
                                                      const std::vector<std::pair<double, double>>& fallback) {
        const ConfigValue* v = find(path);
        if (v == nullptr) {
            return fallback;
        }
        const std::string msg = "'" + path + "' must be an array of [x, y] number pairs";
        if (v->kind != ConfigValue::Kind::array) {
            throw ConfigError(v->line, msg);
        }
        std::vector<std::pair<double, double>> out;
        for (const auto& item : v->items) {
            if (item.kind != ConfigValue::Kind::array || item.items.size() != 2 || !item.items[0].is_number() ||
                !item.items[1].is_number()) {
                throw ConfigError(item.line, msg);
            }
            out.emplace_back(item.items[0].as_double(), item.items[1].as_double());
        }
        return out;
    }

    /// Throws on the first key that was never read.
    void finish() const {
        for (const auto& [path, value] : doc_.values()) {
            if (!used_.count(path)) {
                throw ConfigError(value.line, "unknown key '" + path + "'");
            }
        }
    }

private:
    const ConfigDocument& doc_;
    std::set<std::string> used_;
};

} // namespace ebsim

#endif // EBSIM_CONFIG_HPP
