#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stiefelflow/dynamics.hpp"
#include "stiefelflow/types.hpp"

namespace stiefelflow {

// Flat "key = value" configuration, one pair per line, # starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse_string(const std::string& text) {
        KeyValueConfig kv;
        std::istringstream in(text);
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            if (kv.values_.count(key))
                throw ConfigError("config: duplicate key '" + key + "'");
            kv.values_[key] = value;
        }
        return kv;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(it->second, key);
    }

    long get_long(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not an integer: " + it->second);
        }
    }

    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            unsigned long long v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not a seed: " + it->second);
        }
    }

    /// Spectrum lists: comma-separated numbers and linspace(lo,hi,count)
    /// terms, optionally wrapped in [ ].
    std::vector<double> get_spectrum(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        std::string s = trim(it->second);
        if (!s.empty() && s.front() == '[' && s.back() == ']') s = trim(s.substr(1, s.size() - 2));
        std::vector<double> out;
        for (const std::string& tok : split_top_level(s)) {
            if (tok.rfind("linspace", 0) == 0) {
                const auto open = tok.find('(');
                const auto close = tok.rfind(')');
                if (open == std::string::npos || close == std::string::npos || close < open)
                    throw ConfigError("config: bad linspace term: " + tok);
                auto args = split_top_level(tok.substr(open + 1, close - open - 1));
                if (args.size() != 3) throw ConfigError("config: linspace needs (lo,hi,count)");
                const double lo = to_double(args[0], key);
                const double hi = to_double(args[1], key);
                const long count = static_cast<long>(to_double(args[2], key));
                if (count < 1) throw ConfigError("config: linspace count must be >= 1");
                for (long i = 0; i < count; ++i)
                    out.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) /
                                                            static_cast<double>(count - 1));
            } else if (!tok.empty()) {
                out.push_back(to_double(tok, key));
            }
        }
        return out;
    }

    void check_known_keys(const std::set<std::string>& known) const {
        for (const auto& [key, value] : values_) {
            (void)value;
            if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        }
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& s, const std::string& key) {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' has a bad number: " + s);
        }
    }

    static std::vector<std::string> split_top_level(const std::string& s) {
        std::vector<std::string> out;
        int depth = 0;
        std::string cur;
        for (char c : s) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ',' && depth == 0) {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!trim(cur).empty()) out.push_back(trim(cur));
        return out;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace stiefelflow
