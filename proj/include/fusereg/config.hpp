#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fusereg/errors.hpp"
#include "fusereg/function_class.hpp"
#include "fusereg/linalg.hpp"
#include "fusereg/numio.hpp"

namespace fusereg {

// Flat dotted-key configuration: one `key = value` per line, '#' starts
// a comment, whitespace around keys and values is trimmed. Values keep
// internal spaces. Reads track which keys were consumed so unknown keys
// can be rejected after parsing.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap parse_text(const std::string& text, const std::string& context) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw config_error(context + " line " + std::to_string(lineno) +
                           ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw config_error(context + " line " + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw config_error(context + " line " + std::to_string(lineno) + ": duplicate key '" +
                           key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigMap parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw config_error("missing config key '" + key + "'");
    consumed_.insert(key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  double number(const std::string& key) const {
    try {
      return parse_double(get(key), "config key " + key);
    } catch (const data_error& e) {
      throw config_error(e.what());
    }
  }

  double number_or(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return number(key);
  }

  long integer(const std::string& key) const {
    const std::string v = get(key);
    try {
      std::size_t pos = 0;
      const long n = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return n;
    } catch (const std::exception&) {
      throw config_error("config key " + key + ": '" + v + "' is not an integer");
    }
  }

  long integer_or(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    return integer(key);
  }

  bool flag_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("config key " + key + ": '" + v + "' is not a boolean");
  }

  // Comma-separated numbers.
  Vector vector(const std::string& key) const {
    const auto parts = split(get(key), ',');
    Vector v(static_cast<Eigen::Index>(parts.size()));
    try {
      for (std::size_t i = 0; i < parts.size(); ++i)
        v(static_cast<Eigen::Index>(i)) =
            parse_double(trim(parts[i]), "config key " + key);
    } catch (const data_error& e) {
      throw config_error(e.what());
    }
    return v;
  }

  // Semicolon-separated rows of comma-separated numbers.
  Matrix matrix(const std::string& key) const {
    const auto rows = split(get(key), ';');
    if (rows.empty()) throw config_error("config key " + key + ": empty matrix");
    std::vector<Vector> parsed;
    try {
      for (const auto& row : rows) {
        const auto parts = split(row, ',');
        Vector v(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i)
          v(static_cast<Eigen::Index>(i)) =
              parse_double(trim(parts[i]), "config key " + key);
        parsed.push_back(std::move(v));
      }
    } catch (const data_error& e) {
      throw config_error(e.what());
    }
    Matrix m(static_cast<Eigen::Index>(parsed.size()), parsed.front().size());
    for (std::size_t r = 0; r < parsed.size(); ++r) {
      if (parsed[r].size() != m.cols())
        throw config_error("config key " + key + ": ragged matrix rows");
      m.row(static_cast<Eigen::Index>(r)) = parsed[r].transpose();
    }
    return m;
  }

  std::vector<std::string> unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key)) out.push_back(key);
    return out;
  }

  void require_all_consumed() const {
    const auto leftover = unconsumed();
    if (!leftover.empty()) {
      std::string msg = "unknown config key(s):";
      for (const auto& k : leftover) msg += " " + k;
      throw config_error(msg);
    }
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : s) {
      if (ch == sep) {
        out.push_back(current);
        current.clear();
      } else {
        current.push_back(ch);
      }
    }
    out.push_back(current);
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

// Builds a FunctionClass from `<group>.kind` and its dependent keys
// (basis expressions or kernel settings).
inline FunctionClass class_from_config(const ConfigMap& cfg, const std::string& group,
                                       int input_dim, int output_dim) {
  const std::string kind = cfg.get_or(group + ".kind", "linear");
  if (kind == "zero") return FunctionClass::zero();
  if (kind == "linear") return FunctionClass::linear();
  if (kind == "basis") {
    const std::string list = cfg.get(group + ".basis");
    try {
      return FunctionClass::basis(parse_feature_list(list, input_dim, output_dim));
    } catch (const data_error& e) {
      throw config_error("config key " + group + ".basis: " + e.what());
    }
  }
  if (kind == "nonparametric" || kind == "allfunctions") {
    KernelConfig kc;
    kc.bandwidth_constant = cfg.number_or(group + ".bandwidth", kc.bandwidth_constant);
    if (cfg.has(group + ".regularization"))
      kc.regularization = cfg.number(group + ".regularization");
    kc.order = static_cast<int>(cfg.integer_or(group + ".order", kc.order));
    return FunctionClass::nonparametric(kc);
  }
  throw config_error("config key " + group + ".kind: unknown class kind '" + kind + "'");
}

inline KernelConfig kernel_from_config(const ConfigMap& cfg, const std::string& group) {
  KernelConfig kc;
  kc.bandwidth_constant = cfg.number_or(group + ".bandwidth", kc.bandwidth_constant);
  if (cfg.has(group + ".regularization"))
    kc.regularization = cfg.number(group + ".regularization");
  kc.order = static_cast<int>(cfg.integer_or(group + ".order", kc.order));
  if (kc.bandwidth_constant <= 0)
    throw config_error("config key " + group + ".bandwidth: must be positive");
  if (kc.order != 0 && kc.order != 1)
    throw config_error("config key " + group + ".order: must be 0 or 1");
  return kc;
}

}  // namespace fusereg
