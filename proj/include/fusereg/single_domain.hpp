#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "fusereg/basis_ls.hpp"
#include "fusereg/corpus.hpp"
#include "fusereg/moments.hpp"
#include "fusereg/predictor.hpp"

namespace fusereg {

inline Predictor fit_zero(int output_dim, int which = 1) {
  return make_zero_predictor(output_dim, Arity::OneDomain, which);
}

// Best linear map in mean square: B = E[y x^T] pinv(E[x x^T]).
inline Predictor fit_linear(const std::vector<LabeledPair>& samples, int which = 1) {
  auto get_x = [](const LabeledPair& p) { return p.x; };
  auto get_y = [](const LabeledPair& p) { return p.y; };
  const Matrix gamma_yx = mean_outer(samples, get_y, get_x, "fit_linear");
  const Matrix gamma_xx = mean_outer(samples, get_x, get_x, "fit_linear");
  return make_linear_predictor(gamma_yx * pseudo_inverse(gamma_xx), which);
}

// Best combination of the given maps with scalar coefficients.
inline Predictor fit_basis(const std::vector<LabeledPair>& samples,
                           const std::vector<FeatureMap>& maps, int which = 1) {
  if (samples.empty()) throw data_error("fit_basis: no samples");
  if (maps.empty()) throw data_error("fit_basis: no basis maps");
  const int n_dim = static_cast<int>(samples[0].y.size());
  for (std::size_t k = 0; k < maps.size(); ++k)
    if (maps[k].output_dim != n_dim)
      throw data_error("fit_basis: map " + std::to_string(k) + " has output dimension " +
                       std::to_string(maps[k].output_dim) + ", targets have " +
                       std::to_string(n_dim));
  std::vector<Vector> xs;
  xs.reserve(samples.size());
  Matrix targets(samples.size(), n_dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].y.size() != n_dim || samples[i].x.size() != samples[0].x.size())
      throw data_error("fit_basis: dimension mismatch at sample " + std::to_string(i));
    xs.push_back(samples[i].x);
    targets.row(static_cast<Eigen::Index>(i)) = samples[i].y;
  }
  ScalarCoeffProblem prob{evaluate_feature_maps(maps, xs), std::move(targets), Vector()};
  const ScalarCoeffSolution sol = solve_scalar_coeff_ls(prob);
  return Predictor(std::make_shared<BasisNode>(maps, sol.coefficients,
                                               static_cast<int>(samples[0].x.size()), which));
}

// Nonparametric fit with the Gaussian-kernel local regressor.
inline Predictor fit_kernel(const std::vector<LabeledPair>& samples, const KernelConfig& cfg = {},
                            int which = 1) {
  if (samples.empty()) throw data_error("fit_kernel: no samples");
  if (cfg.order == 1 && samples.size() < 2)
    throw data_error("fit_kernel: locally linear fit needs at least two samples");
  Matrix x(samples.size(), samples[0].x.size());
  Matrix y(samples.size(), samples[0].y.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != x.cols() || samples[i].y.size() != y.cols())
      throw data_error("fit_kernel: dimension mismatch at sample " + std::to_string(i));
    x.row(static_cast<Eigen::Index>(i)) = samples[i].x;
    y.row(static_cast<Eigen::Index>(i)) = samples[i].y;
  }
  auto reg = std::make_shared<KernelRegressor>(std::move(x), std::move(y), cfg);
  return Predictor(std::make_shared<KernelNode>(std::move(reg), which));
}

// Dispatch on the class kind. output_dim is only needed for the zero
// class when no samples are given.
inline Predictor fit_class(const std::vector<LabeledPair>& samples, const FunctionClass& cls,
                           int which = 1, std::optional<int> output_dim = {}) {
  switch (cls.kind()) {
    case ClassKind::Zero: {
      int dim = output_dim ? *output_dim
                           : (samples.empty() ? 0 : static_cast<int>(samples[0].y.size()));
      if (dim < 1) throw data_error("fit_class: zero class needs an output dimension");
      return fit_zero(dim, which);
    }
    case ClassKind::Linear: return fit_linear(samples, which);
    case ClassKind::Basis: return fit_basis(samples, cls.basis_maps(), which);
    case ClassKind::Nonparametric: return fit_kernel(samples, cls.kernel_config(), which);
  }
  throw data_error("fit_class: unknown class kind");
}

}  // namespace fusereg
