#pragma once

// Flat `key = value` configuration with `#` comments and dotted keys.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evofam/error.hpp"

namespace evofam {

inline Error config_error(const std::string& what) { return Error(ErrorKind::config, what); }

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    Config cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw config_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key = trim(body.substr(0, eq));
      if (key.empty()) throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key)) throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      cfg.values_[key] = trim(body.substr(eq + 1));
    }
    return cfg;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot read config file " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str(), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string str(const std::string& key, const std::string& def) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double num(const std::string& key, double def) const {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    const std::string v = str(key, "");
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw config_error("config key '" + key + "': expected a number, got '" + v + "'");
    return out;
  }

  long long integer(const std::string& key, long long def) const {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    const std::string v = str(key, "");
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw config_error("config key '" + key + "': expected an integer, got '" + v + "'");
    return out;
  }

  bool flag(const std::string& key, bool def) const {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    const std::string v = str(key, "");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config key '" + key + "': expected a boolean, got '" + v + "'");
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) const {
    if (!has(key)) {
      used_.insert(key);
      return def;
    }
    std::vector<double> out;
    std::stringstream ss(str(key, ""));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) throw config_error("config key '" + key + "': bad list entry '" + item + "'");
      out.push_back(v);
    }
    if (out.empty()) throw config_error("config key '" + key + "': empty list");
    return out;
  }

  /// All keys with the given prefix, prefix stripped.
  std::map<std::string, std::string> section(const std::string& prefix) const {
    std::map<std::string, std::string> out;
    for (const auto& kv : values_) {
      if (kv.first.rfind(prefix, 0) == 0) {
        used_.insert(kv.first);
        out[kv.first.substr(prefix.size())] = kv.second;
      }
    }
    return out;
  }

  /// Throws naming the first key that no accessor has read.
  void reject_unused() const {
    for (const auto& kv : values_) {
      if (!used_.count(kv.first)) throw config_error("unknown config key '" + kv.first + "'");
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace evofam
