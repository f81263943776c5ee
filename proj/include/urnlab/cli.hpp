#pragma once

#include "urnlab/io.hpp"
#include "urnlab/urnlab.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace urnlab {
namespace cli {

using nlohmann::json;

inline Error config_error(const std::string& msg) {
  return Error("config.invalid", msg);
}

inline json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config.missing", "cannot open config file " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const std::exception& e) {
    throw config_error("config " + path + " is not valid JSON: " + std::string(e.what()));
  }
  if (!cfg.contains("schema_version") || cfg["schema_version"] != 1)
    throw config_error("config must declare schema_version = 1");
  return cfg;
}

inline void validate_keys(const json& obj, const std::set<std::string>& allowed,
                          const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw config_error("unknown key \"" + it.key() + "\" in " + where);
}

// f grammar: identity | power:<alpha> | sqrt | custom:<path>
// A custom file supplies tabulated values and derivatives on a grid.
inline ShapeFunction parse_shape(const std::string& spec) {
  if (spec == "identity") return ShapeFunction::identity();
  if (spec == "sqrt") return ShapeFunction::sqrt_shape();
  if (spec.rfind("power:", 0) == 0) {
    double alpha;
    try {
      alpha = std::stod(spec.substr(6));
    } catch (...) {
      throw config_error("bad power exponent in f spec \"" + spec + "\"");
    }
    return ShapeFunction::power(alpha);
  }
  if (spec.rfind("custom:", 0) == 0) {
    std::string path = spec.substr(7);
    std::ifstream in(path);
    if (!in) throw Error("config.missing", "cannot open custom f " + path);
    json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw config_error(std::string("custom f file is not valid JSON: ") + e.what());
    }
    validate_keys(j,
                  {"ys", "fs", "dfs", "right_deriv_0", "left_deriv_1",
                   "right_second_deriv_0", "shape", "unbounded_domain",
                   "regvar_index", "name"},
                  "custom f file");
    auto ys = j.at("ys").get<std::vector<double>>();
    auto fs = j.at("fs").get<std::vector<double>>();
    auto dfs = j.at("dfs").get<std::vector<double>>();
    if (ys.size() < 2 || ys.size() != fs.size() || ys.size() != dfs.size())
      throw config_error("custom f tables need matching ys/fs/dfs, >= 2 rows");
    if (!std::is_sorted(ys.begin(), ys.end()))
      throw config_error("custom f grid must be sorted");
    auto interp = [](std::vector<double> xs, std::vector<double> vs) {
      return [xs = std::move(xs), vs = std::move(vs)](double x) {
        if (x <= xs.front()) return vs.front();
        if (x >= xs.back()) return vs.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        size_t i = size_t(it - xs.begin());
        double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return (1.0 - w) * vs[i - 1] + w * vs[i];
      };
    };
    ShapeFunction::CustomSpec cs;
    cs.eval = interp(ys, fs);
    cs.deriv = interp(ys, dfs);
    cs.right_deriv_0 = j.value("right_deriv_0", dfs.front());
    cs.left_deriv_1 = j.value("left_deriv_1", dfs.back());
    if (j.contains("right_second_deriv_0"))
      cs.right_second_deriv_0 = j["right_second_deriv_0"].get<double>();
    std::string shape = j.value("shape", "unknown");
    cs.curvature = shape == "concave"  ? ShapeFunction::Curvature::Concave
                   : shape == "convex" ? ShapeFunction::Curvature::Convex
                                       : ShapeFunction::Curvature::Unknown;
    cs.unbounded_domain = j.value("unbounded_domain", false);
    if (j.contains("regvar_index"))
      cs.regvar_index = j["regvar_index"].get<double>();
    cs.name = j.value("name", std::string("custom:") + path);
    return ShapeFunction::custom(std::move(cs));
  }
  throw config_error("bad f spec \"" + spec +
                     "\" (expected identity | power:<a> | sqrt | custom:<path>)");
}

inline DrawingRule parse_rule(const json& j) {
  validate_keys(j, {"kind", "f"}, "rule");
  std::string kind = j.value("kind", "skewed_frequency");
  ShapeFunction f = parse_shape(j.value("f", "identity"));
  if (kind == "skewed_frequency") return DrawingRule::skewed_frequency(f);
  if (kind == "skewed_raw") return DrawingRule::skewed_raw(f);
  throw config_error("bad rule kind \"" + kind + "\"");
}

inline Vec parse_vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw config_error(where + " must be a nonempty array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(int(i)) = j[i].get<double>();
  return v;
}

inline Mat parse_mat(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw config_error(where + " must be a matrix (array of rows)");
  int d = int(j.size());
  Mat m(d, int(j[0].size()));
  for (int i = 0; i < d; ++i) {
    if (int(j[i].size()) != m.cols())
      throw config_error(where + " rows must have equal length");
    for (int k = 0; k < m.cols(); ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline AdditionRuleModel parse_model(const json& j, int d_hint) {
  validate_keys(j, {"kind", "p", "matrix"}, "model");
  std::string kind = j.value("kind", "identity");
  if (kind == "identity") return AdditionRuleModel::identity(d_hint);
  if (kind == "bernoulli_finance")
    return AdditionRuleModel::bernoulli_finance(parse_vec(j.at("p"), "model.p"));
  if (kind == "deterministic_balanced")
    return AdditionRuleModel::deterministic_balanced(
        parse_mat(j.at("matrix"), "model.matrix"));
  throw config_error("bad model kind \"" + kind + "\"");
}

// "lo:hi:step" inclusive grid
inline std::vector<double> parse_grid(const std::string& spec) {
  double lo, hi, step;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
      step <= 0.0 || hi < lo)
    throw config_error("bad grid \"" + spec + "\" (expected lo:hi:step)");
  std::vector<double> out;
  for (double a = lo; a <= hi + 1e-12; a += step) out.push_back(a);
  return out;
}

inline std::vector<long long> parse_checkpoints(const json& j,
                                                long long horizon) {
  if (j.is_null()) return geometric_checkpoints(horizon);
  if (j.is_array()) {
    std::vector<long long> out;
    for (const auto& v : j) out.push_back(v.get<long long>());
    return out;
  }
  validate_keys(j, {"kind", "c", "rho"}, "checkpoints");
  if (j.value("kind", "geometric") != "geometric")
    throw config_error("checkpoints.kind must be geometric or an index list");
  return geometric_checkpoints(horizon, j.value("c", 10.0),
                               j.value("rho", 1.25));
}

}  // namespace cli
}  // namespace urnlab
