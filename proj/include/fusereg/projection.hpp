#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fusereg/corpus.hpp"
#include "fusereg/fusion.hpp"
#include "fusereg/kernel.hpp"
#include "fusereg/predictor.hpp"
#include "fusereg/single_domain.hpp"

namespace fusereg {

struct ProjectionOptions {
  KernelConfig kernel{};
  // Fit the conditional mean on one half of the unlabeled set and keep
  // the other half out, instead of reusing every pair for both the
  // inner evaluation and the outer regression.
  bool split_half = false;
  // Innovation is declared vanished when its mean squared norm falls
  // below this fraction of the mean squared norm of the projected
  // predictor's inputs.
  double vanish_tol_scale = 1e-3;
};

namespace detail {

inline Predictor kernel_fit_pairs(std::vector<LabeledPair> pairs, const KernelConfig& cfg) {
  return fit_kernel(std::move(pairs), cfg, 1);
}

}  // namespace detail

// E[rho(X1, X2) | X1] estimated by kernel regression of the evaluated
// predictor on the domain-1 coordinates of the unlabeled pairs.
inline Predictor project(const Predictor& rho, const TrainingCorpus& c,
                         const ProjectionOptions& opt = {}) {
  if (rho.arity() == Arity::OneDomain && rho.which() == 1)
    return rho;  // already a function of x1 alone
  const auto& un = c.unlabeled();
  if (un.size() < 2) throw data_error("project: needs at least two unlabeled pairs");

  std::size_t begin = 0, end = un.size();
  if (opt.split_half && un.size() >= 4) begin = un.size() / 2;

  std::vector<LabeledPair> pairs;
  pairs.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i)
    pairs.push_back({un[i].x1, predict_atom(rho, {un[i].x1, un[i].x2, Vector()})});

  Predictor projected = detail::kernel_fit_pairs(std::move(pairs), opt.kernel);
  if (un.size() < 30)
    projected = projected.with_note(
        "projection fit on fewer than 30 unlabeled pairs; estimate may be unstable");
  if (opt.split_half && un.size() >= 4)
    projected = projected.with_note("projection fit on held-out half of the unlabeled set");
  return projected;
}

// psi_B fit on the labeled domain-2 set, then projected onto domain 1
// through the unlabeled pairs.
inline Predictor shared_representation(const TrainingCorpus& c, const FunctionClass& classB,
                                       const ProjectionOptions& opt = {}) {
  if (c.labeled2().empty())
    throw data_error("shared-representation requires labeled domain-2 examples");
  const Predictor psi = fit_class(c.labeled2(), classB, 2, c.dims().n);
  return project(lift(psi), c, opt);
}

// Domain transfer when classB is degenerate: the single-domain fit is
// already optimal, so it is returned unchanged.
inline Predictor cross_domain(const TrainingCorpus& c, const FunctionClass& classA) {
  if (c.labeled1().empty()) throw data_error("cross_domain: needs labeled domain-1 examples");
  return fit_class(c.labeled1(), classA, 1, c.dims().n);
}

// Linear regression with nonlinear side information: project the
// domain-2 conditional mean onto domain 1, then add a linear gain on
// the self innovation X1 - E[X1|X2], itself evaluated through its
// domain-1 projection.
inline Predictor side_info_linear_nonlinear(const TrainingCorpus& c,
                                            const ProjectionOptions& opt = {}) {
  if (c.labeled1().empty())
    throw data_error("side_info_linear_nonlinear: needs labeled domain-1 samples");
  if (c.labeled2().size() < 2)
    throw data_error("side_info_linear_nonlinear: needs at least two labeled domain-2 samples");
  if (c.unlabeled().size() < 2)
    throw data_error("side_info_linear_nonlinear: needs at least two unlabeled pairs");
  const std::string op = "side_info_linear_nonlinear";

  // E[Y|X2] on labeled2, then its projection E[E[Y|X2] | X1].
  const Predictor y_projected =
      detail::fusion_stage(op, "conditional mean of y given x2", [&] {
        return project(lift(fit_kernel(c.labeled2(), opt.kernel, 2)), c, opt);
      });

  // E[X1|X2] on the unlabeled pairs, innovation W = X1 - E[X1|X2].
  const Predictor cond_x1_x2 =
      detail::fusion_stage(op, "conditional mean of x1 given x2", [&] {
        std::vector<LabeledPair> x1_on_x2;
        x1_on_x2.reserve(c.unlabeled().size());
        for (const auto& p : c.unlabeled()) x1_on_x2.push_back({p.x2, p.x1});
        return fit_kernel(std::move(x1_on_x2), opt.kernel, 2);
      });

  const Matrix gain = detail::fusion_stage(op, "innovation gain", [&] {
    Matrix gamma_ww = Matrix::Zero(c.dims().m1, c.dims().m1);
    for (const auto& p : c.unlabeled()) {
      const Vector w = p.x1 - cond_x1_x2(p.x2);
      gamma_ww.noalias() += w * w.transpose();
    }
    gamma_ww /= static_cast<double>(c.unlabeled().size());

    // Gamma_YW = E[Y X1^T] - E[Y E[X1|X2]^T], split across the labeled sets.
    auto y_of = [](const LabeledPair& p) { return p.y; };
    const Matrix gamma_yx1 = mean_outer(
        c.labeled1(), y_of, [](const LabeledPair& p) { return p.x; }, op + "(labeled1)");
    const Matrix gamma_ycond = mean_outer(
        c.labeled2(), y_of, [&](const LabeledPair& p) { return Vector(cond_x1_x2(p.x)); },
        op + "(labeled2)");
    return Matrix((gamma_yx1 - gamma_ycond) * pseudo_inverse(gamma_ww));
  });

  // E[E[X1|X2] | X1] so the correction is a function of x1 alone.
  const Predictor cond_projected =
      detail::fusion_stage(op, "projection of the conditional mean of x1", [&] {
        std::vector<LabeledPair> cond_on_x1;
        cond_on_x1.reserve(c.unlabeled().size());
        for (const auto& p : c.unlabeled()) cond_on_x1.push_back({p.x1, cond_x1_x2(p.x2)});
        return fit_kernel(std::move(cond_on_x1), opt.kernel, 1);
      });

  const Predictor correction(
      std::make_shared<SelfResidualGainNode>(cond_projected, gain, 1));
  return sum_predictors({y_projected, correction}, Arity::OneDomain);
}

struct ProjectionReport {
  Predictor predictor;          // the one-domain estimator E[rho_M|X1]
  double innovation_norm = 0.0; // second moment of the projected innovation term
  bool vanished = false;
  double vanish_tol = 0.0;
  double reference_norm = 0.0;  // second moment of rho_M outputs
};

// Whether the second labeled set contributes anything to the
// single-domain estimator: the innovation components psi_k - eta_k are
// projected onto x1 and their combined second moment compared against
// a relative threshold.
inline ProjectionReport check_innovation_vanishes(const TrainingCorpus& c,
                                                  const FunctionClass& classA,
                                                  const FunctionClass& classB,
                                                  const ProjectionOptions& opt = {}) {
  FusionOptions fopt;
  fopt.kernel = opt.kernel;
  const Predictor rho_m = fuse(c, {classA, classB}, fopt);

  ProjectionReport out;
  out.predictor = project(rho_m, c, opt);
  for (const auto& p : c.unlabeled())
    out.reference_norm += predict_atom(rho_m, {p.x1, p.x2, Vector()}).squaredNorm();
  out.reference_norm /= static_cast<double>(c.unlabeled().size());
  out.vanish_tol = opt.vanish_tol_scale * out.reference_norm;

  if (classB.kind() == ClassKind::Zero) {
    out.innovation_norm = 0.0;
  } else if (classA.kind() == ClassKind::Zero) {
    // With a degenerate first class the fused predictor is the
    // innovation term, so its projection is measured directly.
    for (const auto& p : c.unlabeled()) out.innovation_norm += out.predictor(p.x1).squaredNorm();
    out.innovation_norm /= static_cast<double>(c.unlabeled().size());
  } else {
    if (classB.kind() == ClassKind::Nonparametric)
      throw data_error(
          "check_innovation_vanishes: classB must have finitely many generators");
    FunctionClass eta_class = classA;
    if (classA.kind() == ClassKind::Nonparametric)
      eta_class = FunctionClass::nonparametric(fopt.kernel);
    const std::vector<FeatureMap> mapsB =
        classB.kind() == ClassKind::Linear ? linear_generator_maps(c.dims().m2, c.dims().n)
                                           : classB.basis_maps();
    const InnovationPredictor inn = fit_innovation(c, eta_class, mapsB);
    const Predictor projected_innovation = project(inn.as_predictor(), c, opt);
    for (const auto& p : c.unlabeled())
      out.innovation_norm += projected_innovation(p.x1).squaredNorm();
    out.innovation_norm /= static_cast<double>(c.unlabeled().size());
  }
  out.vanished = out.innovation_norm <= out.vanish_tol;
  return out;
}

}  // namespace fusereg
