#pragma once

#include "mass/numerics.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace mass::harness {

/// Flat key/value settings. Files use `key = value` lines, `#` comments and
/// `[section]` headers; keys inside a section are stored as `section.key`.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, const std::string& origin = "<config>") {
        KeyValueConfig cfg;
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ParameterError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ParameterError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            if (key.empty()) throw ParameterError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (!section.empty()) key = section + "." + key;
            cfg.values_[key] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::optional<std::string> get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<double> get_double(const std::string& key) const {
        auto s = get_string(key);
        if (!s) return std::nullopt;
        try {
            std::size_t used = 0;
            const double v = std::stod(*s, &used);
            if (used != s->size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ParameterError("config key '" + key + "': '" + *s + "' is not a number");
        }
    }

    std::optional<long long> get_int(const std::string& key) const {
        auto s = get_string(key);
        if (!s) return std::nullopt;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(*s, &used);
            if (used != s->size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ParameterError("config key '" + key + "': '" + *s + "' is not an integer");
        }
    }

    std::optional<bool> get_bool(const std::string& key) const {
        auto s = get_string(key);
        if (!s) return std::nullopt;
        if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
        if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
        throw ParameterError("config key '" + key + "': '" + *s + "' is not a boolean");
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace mass::harness
