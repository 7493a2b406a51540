#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fusereg/corpus.hpp"
#include "fusereg/errors.hpp"
#include "fusereg/predictor.hpp"

namespace fusereg {

// Compact "kind(child,...)" rendering of a predictor's node tree.
inline std::string describe_structure(const nlohmann::json& node) {
  std::string out = node.value("kind", "?");
  std::vector<std::string> children;
  for (const auto& [key, value] : node.items()) {
    if (value.is_object() && value.contains("kind")) {
      children.push_back(describe_structure(value));
    } else if (value.is_array()) {
      for (const auto& entry : value)
        if (entry.is_object() && entry.contains("kind"))
          children.push_back(describe_structure(entry));
    }
  }
  if (!children.empty()) {
    out += "(";
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (i > 0) out += ",";
      out += children[i];
    }
    out += ")";
  }
  return out;
}

inline std::string describe(const Predictor& p) { return describe_structure(p.node()->structure()); }

struct EvaluationReport {
  std::string metric;
  double value = 0.0;
  Vector per_target;      // per-coordinate rmse, or per-class accuracy
  std::string estimator;  // structure descriptor of the evaluated predictor
  std::size_t l1 = 0, l2 = 0, u = 0;
  double wall_seconds = 0.0;
};

inline Eigen::Index argmax_lowest(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

inline double mean_squared_error(const Predictor& p, const std::vector<Atom>& test) {
  if (test.empty()) throw data_error("mean_squared_error: empty test set");
  double acc = 0.0;
  for (const auto& a : test) acc += (a.y - predict_atom(p, a)).squaredNorm();
  return acc / static_cast<double>(test.size());
}

inline EvaluationReport evaluate(const Predictor& p, const std::vector<Atom>& test,
                                 const std::string& metric) {
  if (test.empty()) throw data_error("evaluate: empty test set");
  if (metric != "rmse" && metric != "accuracy")
    throw config_error("evaluate: unknown metric '" + metric + "' (expected rmse or accuracy)");

  EvaluationReport r;
  r.metric = metric;
  r.estimator = describe(p);
  const std::size_t n = test.size();

  if (metric == "rmse") {
    const Eigen::Index dim = test.front().y.size();
    Vector per = Vector::Zero(dim);
    double total = 0.0;
    for (const auto& a : test) {
      const Vector diff = a.y - predict_atom(p, a);
      if (diff.size() != dim) throw data_error("evaluate: inconsistent target dimensions");
      total += diff.squaredNorm();
      per.array() += diff.array().square();
    }
    r.value = std::sqrt(total / static_cast<double>(n));
    r.per_target = (per / static_cast<double>(n)).cwiseSqrt();
  } else {
    const Eigen::Index dim = test.front().y.size();
    Vector correct = Vector::Zero(dim), counts = Vector::Zero(dim);
    std::size_t hits = 0;
    for (const auto& a : test) {
      if (a.y.size() != dim) throw data_error("evaluate: inconsistent target dimensions");
      const Eigen::Index truth = argmax_lowest(a.y);
      const Eigen::Index guess = argmax_lowest(predict_atom(p, a));
      counts(truth) += 1.0;
      if (truth == guess) {
        correct(truth) += 1.0;
        ++hits;
      }
    }
    r.value = static_cast<double>(hits) / static_cast<double>(n);
    r.per_target = Vector::Zero(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      r.per_target(j) = counts(j) > 0 ? correct(j) / counts(j) : 0.0;
  }
  return r;
}

// One-domain convenience: place the input on the predictor's domain.
inline EvaluationReport evaluate(const Predictor& p, const std::vector<LabeledPair>& test,
                                 const std::string& metric) {
  if (p.arity() == Arity::TwoDomain)
    throw data_error("evaluate: two-domain predictor needs (x1, x2, y) test atoms");
  std::vector<Atom> atoms;
  atoms.reserve(test.size());
  for (const auto& s : test) {
    if (p.which() == 1)
      atoms.push_back({s.x, Vector(), s.y});
    else
      atoms.push_back({Vector(), s.x, s.y});
  }
  return evaluate(p, atoms, metric);
}

}  // namespace fusereg
