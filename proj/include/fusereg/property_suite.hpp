#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/discrete.hpp"
#include "fusereg/sampling.hpp"

namespace fusereg {

struct PropertyOutcome {
  std::string property;
  int instances = 0;
  int failures = 0;
  double worst_residual = 0.0;
  std::vector<std::string> notes;
  bool passed() const { return failures == 0 && instances > 0; }
};

// The class pairs exercised by the discrete-oracle properties.
inline std::vector<std::pair<std::string, std::pair<FunctionClass, FunctionClass>>>
standard_class_pairs() {
  const FunctionClass lin = FunctionClass::linear();
  const FunctionClass all = FunctionClass::nonparametric({});
  const FunctionClass quad = FunctionClass::basis(parse_feature_list("x0, x0^2", 1, 1));
  return {{"Linear/Linear", {lin, lin}},
          {"Basis/Basis", {quad, quad}},
          {"AllFunctions/Linear", {all, lin}},
          {"AllFunctions/Basis", {all, quad}}};
}

namespace detail {

inline void record(PropertyOutcome& out, double residual, double tol, const std::string& what) {
  ++out.instances;
  out.worst_residual = std::max(out.worst_residual, residual);
  if (!(residual <= tol)) {
    ++out.failures;
    if (out.notes.size() < 8)
      out.notes.push_back(what + ": residual " + format_double(residual) + " exceeds " +
                          format_double(tol));
  }
}

}  // namespace detail

// Minimax invariance: the exact sum-class solution computed on F and on
// its reflection agree pointwise on the support and in MSE.
inline PropertyOutcome invariance_property(std::uint64_t seed, int count) {
  PropertyOutcome out;
  out.property = "minimax-invariance";
  for (int i = 0; i < count; ++i) {
    const DiscreteJoint dj = random_discrete_joint(seed + static_cast<std::uint64_t>(i));
    for (const auto& [pair_name, classes] : standard_class_pairs()) {
      const Predictor rho = exact_minimax(dj, classes.first, classes.second);
      const DiscreteJoint refl = reflect(dj, rho);
      const Predictor rho2 = exact_minimax(refl, classes.first, classes.second);
      double worst = 0.0;
      for (const auto& a : dj.atoms())
        worst = std::max(worst,
                         max_abs(predict_atom(rho, a) - predict_atom(rho2, a)));
      const double mse_gap = std::abs(exact_mse(dj, rho) - exact_mse(refl, rho2));
      const std::string what =
          "seed " + std::to_string(seed + static_cast<std::uint64_t>(i)) + " " + pair_name;
      detail::record(out, worst, 1e-10, what + " pointwise");
      detail::record(out, mse_gap, 1e-10, what + " mse");
    }
  }
  return out;
}

// Reflection membership: the reflected joint satisfies all four family
// conditions of the instance that produced it.
inline PropertyOutcome reflection_property(std::uint64_t seed, int count) {
  PropertyOutcome out;
  out.property = "reflection-membership";
  for (int i = 0; i < count; ++i) {
    const DiscreteJoint dj = random_discrete_joint(seed + static_cast<std::uint64_t>(i));
    for (const auto& [pair_name, classes] : standard_class_pairs()) {
      const Predictor rho = exact_minimax(dj, classes.first, classes.second);
      const DiscreteJoint refl = reflect(dj, rho);
      const FeasibleFamilySpec spec = family_of(dj, classes.first, classes.second);
      const MembershipVerdict v = check_membership(refl, spec, 1e-9);
      const double residual = std::max({v.residual_a, v.residual_b, v.residual_marginal,
                                        v.residual_second_moment});
      detail::record(out, residual, 1e-9,
                     "seed " + std::to_string(seed + static_cast<std::uint64_t>(i)) + " " +
                         pair_name + (v.member ? "" : " (failing: " + v.failing + ")"));
    }
  }
  return out;
}

// Regret identity: MSE(rho) - MMSE equals the mean squared distance to
// the conditional mean, for the two-domain and one-domain cases.
inline PropertyOutcome regret_property(std::uint64_t seed, int count) {
  PropertyOutcome out;
  out.property = "regret-identity";
  for (int i = 0; i < count; ++i) {
    const DiscreteJoint dj = random_discrete_joint(seed + static_cast<std::uint64_t>(i));
    const std::string what = "seed " + std::to_string(seed + static_cast<std::uint64_t>(i));

    const Predictor rho = exact_minimax(dj, FunctionClass::linear(), FunctionClass::linear());
    const auto cm = exact_joint_conditional_mean(dj);
    double mmse = 0.0;
    for (std::size_t k = 0; k < dj.atoms().size(); ++k)
      mmse += dj.probs()[k] * (dj.atoms()[k].y - cm[k]).squaredNorm();
    const double via_mse = exact_mse(dj, rho) - mmse;
    const double via_distance = exact_regret(dj, rho);
    detail::record(out, std::abs(via_mse - via_distance), 1e-10, what + " two-domain");

    // One-domain version against E[Y|X1].
    const Predictor rho_s = exact_project(dj, rho, 1);
    const Predictor cond1 =
        exact_class_optimal(dj, 1, FunctionClass::nonparametric({}));
    double mmse1 = 0.0, dist1 = 0.0, mse1 = 0.0;
    for (std::size_t k = 0; k < dj.atoms().size(); ++k) {
      const Atom& a = dj.atoms()[k];
      mmse1 += dj.probs()[k] * (a.y - cond1(a.x1)).squaredNorm();
      mse1 += dj.probs()[k] * (a.y - rho_s(a.x1)).squaredNorm();
      dist1 += dj.probs()[k] * (rho_s(a.x1) - cond1(a.x1)).squaredNorm();
    }
    detail::record(out, std::abs((mse1 - mmse1) - dist1), 1e-10, what + " one-domain");
  }
  return out;
}

// Worst-case-regret spot check: over the pair {F, reflected F}, the
// projected minimax solution beats randomly perturbed alternatives.
inline PropertyOutcome spotcheck_property(std::uint64_t seed, int count, int alternatives) {
  PropertyOutcome out;
  out.property = "minimax-regret-spot-check";
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const DiscreteJoint dj = random_discrete_joint(s);
    const std::string what = "seed " + std::to_string(s);
    const Predictor rho = exact_minimax(dj, FunctionClass::linear(), FunctionClass::linear());
    const Predictor rho_s = exact_project(dj, rho, 1);
    const DiscreteJoint refl = reflect(dj, rho);

    // Conditional means of Y given x1 under both distributions, plus the
    // x1 marginal (shared by construction).
    const Predictor cond_f = exact_class_optimal(dj, 1, FunctionClass::nonparametric({}));
    const Predictor cond_r = exact_class_optimal(refl, 1, FunctionClass::nonparametric({}));
    const Matrix keys = detail::distinct_domain_values(dj, 1);
    Vector mass = Vector::Zero(keys.rows());
    for (std::size_t k = 0; k < dj.atoms().size(); ++k)
      for (Eigen::Index r = 0; r < keys.rows(); ++r)
        if ((keys.row(r).transpose().array() == dj.atoms()[k].x1.array()).all()) {
          mass(r) += dj.probs()[k];
          break;
        }

    auto worst_regret = [&](const std::vector<Vector>& values) {
      double reg_f = 0.0, reg_r = 0.0;
      for (Eigen::Index r = 0; r < keys.rows(); ++r) {
        const Vector x = keys.row(r).transpose();
        reg_f += mass(r) * (values[static_cast<std::size_t>(r)] - cond_f(x)).squaredNorm();
        reg_r += mass(r) * (values[static_cast<std::size_t>(r)] - cond_r(x)).squaredNorm();
      }
      return std::max(reg_f, reg_r);
    };

    std::vector<Vector> base;
    for (Eigen::Index r = 0; r < keys.rows(); ++r)
      base.push_back(rho_s(keys.row(r).transpose()));
    const double champion = worst_regret(base);

    Rng rng(s ^ 0x5b0c3a77ULL);
    int beaten = 0;
    for (int alt = 0; alt < alternatives; ++alt) {
      // Perturbation normalized to an exact L2(mu) size in [0.05, 1].
      std::vector<Vector> delta;
      double norm2 = 0.0;
      for (Eigen::Index r = 0; r < keys.rows(); ++r) {
        Vector d(dj.dims().n);
        for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = rng.gaussian();
        norm2 += mass(r) * d.squaredNorm();
        delta.push_back(std::move(d));
      }
      const double target = 0.05 + 0.95 * rng.uniform();
      const double scale = target / std::sqrt(std::max(norm2, 1e-300));
      std::vector<Vector> candidate = base;
      for (Eigen::Index r = 0; r < keys.rows(); ++r)
        candidate[static_cast<std::size_t>(r)] += scale * delta[static_cast<std::size_t>(r)];
      if (worst_regret(candidate) > champion + 1e-12) ++beaten;
    }
    detail::record(out, static_cast<double>(alternatives - beaten), 0.0,
                   what + " (alternatives not beaten)");
  }
  return out;
}

inline std::vector<PropertyOutcome> run_oracle_suite(std::uint64_t seed, int count) {
  return {invariance_property(seed, count), reflection_property(seed, count),
          regret_property(seed, count), spotcheck_property(seed, count, 100)};
}

// Negative control: corrupt the probability table of a reflected joint
// and confirm membership checking rejects it.
inline MembershipVerdict corrupted_membership(std::uint64_t seed) {
  const DiscreteJoint dj = random_discrete_joint(seed);
  const FunctionClass lin = FunctionClass::linear();
  const Predictor rho = exact_minimax(dj, lin, lin);
  const DiscreteJoint refl = reflect(dj, rho);
  std::vector<double> probs = refl.probs();
  const double shift = 0.2 * probs[0];
  probs[0] -= shift;
  probs[1] += shift;
  const DiscreteJoint corrupted(refl.atoms(), probs);
  return check_membership(corrupted, family_of(dj, lin, lin), 1e-9);
}

}  // namespace fusereg
