#pragma once

#include <string>
#include <vector>

#include "fusereg/function_class.hpp"
#include "fusereg/linalg.hpp"

namespace fusereg {

// Weighted least squares with scalar coefficients over arbitrary basis
// maps: minimize sum_i w_i ||y_i - sum_k a_k f_k(x_i)||^2. Features come
// pre-evaluated, one n x N matrix per map. The normal equations are
// solved with the pseudo-inverse so linearly dependent maps get the
// minimum-norm coefficient vector.
struct ScalarCoeffProblem {
  std::vector<Matrix> features;
  Matrix targets;   // n x N
  Vector weights;   // n entries; empty means uniform 1/n
  // Per-feature second-moment floor: a feature whose weighted second
  // moment falls at or below its floor is numerically the zero function
  // (typically by cancellation) and gets coefficient 0 instead of
  // letting the pseudo-inverse amplify rounding noise. Empty disables.
  Vector drop_floor;
};

struct ScalarCoeffSolution {
  Vector coefficients;
  Matrix gram;  // G_jk = sum_i w_i f_j(x_i) . f_k(x_i)
  Vector rhs;   // r_j  = sum_i w_i f_j(x_i) . y_i
};

inline ScalarCoeffSolution solve_scalar_coeff_ls(const ScalarCoeffProblem& p) {
  const std::size_t kcount = p.features.size();
  if (kcount == 0) throw data_error("solve_scalar_coeff_ls: no basis maps");
  const Eigen::Index n = p.targets.rows();
  if (n == 0) throw data_error("solve_scalar_coeff_ls: no samples");
  for (std::size_t k = 0; k < kcount; ++k)
    if (p.features[k].rows() != n || p.features[k].cols() != p.targets.cols())
      throw data_error("solve_scalar_coeff_ls: feature block " + std::to_string(k) +
                       " has wrong shape");
  Vector w;
  if (p.weights.size() == 0)
    w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  else if (p.weights.size() == n)
    w = p.weights;
  else
    throw data_error("solve_scalar_coeff_ls: weight count does not match sample count");

  ScalarCoeffSolution sol;
  sol.gram = Matrix(kcount, kcount);
  sol.rhs = Vector(kcount);
  for (std::size_t j = 0; j < kcount; ++j) {
    for (std::size_t k = j; k < kcount; ++k) {
      const double g =
          ((p.features[j].array() * p.features[k].array()).rowwise().sum() * w.array()).sum();
      sol.gram(j, k) = g;
      sol.gram(k, j) = g;
    }
    sol.rhs(j) = ((p.features[j].array() * p.targets.array()).rowwise().sum() * w.array()).sum();
  }
  if (!sol.gram.allFinite() || !sol.rhs.allFinite())
    throw numeric_error("solve_scalar_coeff_ls: non-finite normal equations");

  if (p.drop_floor.size() != 0) {
    if (p.drop_floor.size() != static_cast<Eigen::Index>(kcount))
      throw data_error("solve_scalar_coeff_ls: drop_floor count does not match map count");
    std::vector<Eigen::Index> alive;
    for (std::size_t k = 0; k < kcount; ++k)
      if (sol.gram(k, k) > p.drop_floor(static_cast<Eigen::Index>(k)))
        alive.push_back(static_cast<Eigen::Index>(k));
    sol.coefficients = Vector::Zero(kcount);
    if (!alive.empty()) {
      Matrix g(alive.size(), alive.size());
      Vector r(alive.size());
      for (std::size_t j = 0; j < alive.size(); ++j) {
        r(static_cast<Eigen::Index>(j)) = sol.rhs(alive[j]);
        for (std::size_t k = 0; k < alive.size(); ++k)
          g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
              sol.gram(alive[j], alive[k]);
      }
      const Vector a = pseudo_inverse(g) * r;
      for (std::size_t j = 0; j < alive.size(); ++j)
        sol.coefficients(alive[j]) = a(static_cast<Eigen::Index>(j));
    }
    return sol;
  }

  sol.coefficients = pseudo_inverse(sol.gram) * sol.rhs;
  return sol;
}

// Stacks map evaluations over a list of inputs. Errors name the map that
// returned the wrong dimension.
inline std::vector<Matrix> evaluate_feature_maps(const std::vector<FeatureMap>& maps,
                                                 const std::vector<Vector>& inputs) {
  std::vector<Matrix> out;
  out.reserve(maps.size());
  for (std::size_t k = 0; k < maps.size(); ++k) {
    Matrix f(inputs.size(), maps[k].output_dim);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Vector v = maps[k].fn(inputs[i]);
      if (v.size() != maps[k].output_dim)
        throw data_error("basis map " + std::to_string(k) + " returned dimension " +
                         std::to_string(v.size()) + ", declared " +
                         std::to_string(maps[k].output_dim));
      f.row(static_cast<Eigen::Index>(i)) = v;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace fusereg
