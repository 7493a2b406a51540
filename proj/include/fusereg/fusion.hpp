#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fusereg/basis_ls.hpp"
#include "fusereg/corpus.hpp"
#include "fusereg/moments.hpp"
#include "fusereg/predictor.hpp"
#include "fusereg/single_domain.hpp"

namespace fusereg {

struct FusionPlan {
  FunctionClass classA = FunctionClass::linear();
  FunctionClass classB = FunctionClass::linear();
};

enum class FusionStrategy {
  DegenerateA,
  DegenerateB,
  LinearLinear,
  BasisBasis,
  PartiallyLinear,
  SemiParametric,
  DoubleNonparametric
};

inline std::string to_string(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::DegenerateA: return "DegenerateA";
    case FusionStrategy::DegenerateB: return "DegenerateB";
    case FusionStrategy::LinearLinear: return "LinearLinear";
    case FusionStrategy::BasisBasis: return "BasisBasis";
    case FusionStrategy::PartiallyLinear: return "PartiallyLinear";
    case FusionStrategy::SemiParametric: return "SemiParametric";
    case FusionStrategy::DoubleNonparametric: return "DoubleNonparametric-out-of-scope";
  }
  return "?";
}

struct FusionDispatch {
  FusionStrategy strategy;
  bool mirrored = false;  // domains swapped relative to the named strategy
};

// The class-pair dispatch table. Linear classes are folded into the
// basis route (their elementary generator maps span the same space), so
// only the genuinely different estimators remain distinct strategies.
inline FusionDispatch strategy_for(const FunctionClass& classA, const FunctionClass& classB) {
  const ClassKind a = classA.kind(), b = classB.kind();
  if (a == ClassKind::Zero) return {FusionStrategy::DegenerateA, false};
  if (b == ClassKind::Zero) return {FusionStrategy::DegenerateB, false};
  if (a == ClassKind::Nonparametric && b == ClassKind::Nonparametric)
    return {FusionStrategy::DoubleNonparametric, false};
  if (a == ClassKind::Linear && b == ClassKind::Linear)
    return {FusionStrategy::LinearLinear, false};
  if (a == ClassKind::Nonparametric)
    return {b == ClassKind::Linear ? FusionStrategy::PartiallyLinear
                                   : FusionStrategy::SemiParametric,
            false};
  if (b == ClassKind::Nonparametric)
    return {a == ClassKind::Linear ? FusionStrategy::PartiallyLinear
                                   : FusionStrategy::SemiParametric,
            true};
  return {FusionStrategy::BasisBasis, false};
}

struct FusionOptions {
  // Kernel settings for the internal conditional-expectation fits, used
  // when the plan's nonparametric class does not carry its own.
  KernelConfig kernel{};
  // The basis route recomputes its cross moments through the fitted
  // phi_A and asserts agreement within a loose standard-error bound.
  bool cross_check = true;
  double cross_check_multiplier = 6.0;
};

// Second-moment blocks of a corpus under their conventional roles:
// y-blocks from the labeled sets, x-blocks from the unlabeled set.
inline MomentSet corpus_moments(const TrainingCorpus& c) {
  MomentSet m;
  auto x_of = [](const auto& p) { return p.x; };
  auto y_of = [](const auto& p) { return p.y; };
  if (!c.labeled1().empty())
    m.insert("y", "x1", mean_outer(c.labeled1(), y_of, x_of, "corpus_moments(labeled1)"),
             c.labeled1().size());
  if (!c.labeled2().empty())
    m.insert("y", "x2", mean_outer(c.labeled2(), y_of, x_of, "corpus_moments(labeled2)"),
             c.labeled2().size());
  auto x1_of = [](const UnlabeledPair& p) { return p.x1; };
  auto x2_of = [](const UnlabeledPair& p) { return p.x2; };
  const std::size_t u = c.unlabeled().size();
  m.insert("x1", "x1", mean_outer(c.unlabeled(), x1_of, x1_of, "corpus_moments(unlabeled)"), u);
  m.insert("x1", "x2", mean_outer(c.unlabeled(), x1_of, x2_of, "corpus_moments(unlabeled)"), u);
  m.insert("x2", "x2", mean_outer(c.unlabeled(), x2_of, x2_of, "corpus_moments(unlabeled)"), u);
  return m;
}

// Best linear predictor from both domains via the stacked normal
// equations: [B1 B2] = [G_yx1 G_yx2] pinv([[G_11, G_12],[G_21, G_22]]).
inline Predictor fuse_linear_linear(const MomentSet& m) {
  const Matrix gyx1 = m.get("y", "x1");
  const Matrix gyx2 = m.get("y", "x2");
  const Matrix g11 = m.get("x1", "x1");
  const Matrix g12 = m.get("x1", "x2");
  const Matrix g22 = m.get("x2", "x2");
  const Eigen::Index m1 = g11.rows(), m2 = g22.rows(), n = gyx1.rows();
  if (gyx1.cols() != m1 || gyx2.cols() != m2 || gyx2.rows() != n || g12.rows() != m1 ||
      g12.cols() != m2)
    throw data_error("fuse_linear_linear: dimension mismatch between moment blocks");

  Matrix block(m1 + m2, m1 + m2);
  block << g11, g12, g12.transpose(), g22;
  Matrix cross(n, m1 + m2);
  cross << gyx1, gyx2;
  const Matrix b = cross * pseudo_inverse(block);
  return Predictor(
      std::make_shared<LinearTwoNode>(b.leftCols(m1), b.rightCols(m2)));
}

// Joint scalar-coefficient least squares over basis maps of both
// domains. Diagonal Gram blocks and the cross block come from the
// unlabeled set; the target cross moments come from the labeled sets.
inline Predictor fuse_basis_basis(const TrainingCorpus& c, const std::vector<FeatureMap>& mapsA,
                                  const std::vector<FeatureMap>& mapsB,
                                  const FusionOptions& opt = {}) {
  if (mapsA.empty() || mapsB.empty())
    throw data_error("fuse_basis_basis: both map lists must be non-empty");
  if (c.labeled1().empty() || c.labeled2().empty())
    throw data_error("fuse_basis_basis: needs at least one sample in each labeled set");
  const int n_dim = c.dims().n;
  for (const auto& maps : {std::cref(mapsA), std::cref(mapsB)})
    for (std::size_t k = 0; k < maps.get().size(); ++k)
      if (maps.get()[k].output_dim != n_dim)
        throw data_error("fuse_basis_basis: map " + std::to_string(k) +
                         " output dimension does not match target dimension");
  const std::size_t k1 = mapsA.size(), k2 = mapsB.size();

  std::vector<Vector> u1, u2;
  u1.reserve(c.unlabeled().size());
  u2.reserve(c.unlabeled().size());
  for (const auto& p : c.unlabeled()) {
    u1.push_back(p.x1);
    u2.push_back(p.x2);
  }
  const std::vector<Matrix> fa = evaluate_feature_maps(mapsA, u1);
  const std::vector<Matrix> fb = evaluate_feature_maps(mapsB, u2);

  Matrix gram(k1 + k2, k1 + k2);
  auto inner_mean = [](const Matrix& a, const Matrix& b) {
    return (a.array() * b.array()).sum() / static_cast<double>(a.rows());
  };
  for (std::size_t j = 0; j < k1 + k2; ++j) {
    for (std::size_t k = j; k < k1 + k2; ++k) {
      const Matrix& a = j < k1 ? fa[j] : fb[j - k1];
      const Matrix& b = k < k1 ? fa[k] : fb[k - k1];
      gram(j, k) = gram(k, j) = inner_mean(a, b);
    }
  }

  Vector rhs(k1 + k2);
  auto labeled_rhs = [n_dim](const std::vector<LabeledPair>& labeled, const FeatureMap& map) {
    double acc = 0.0;
    for (const auto& p : labeled) acc += map.fn(p.x).dot(p.y);
    return acc / static_cast<double>(labeled.size());
  };
  for (std::size_t j = 0; j < k1; ++j) rhs(j) = labeled_rhs(c.labeled1(), mapsA[j]);
  for (std::size_t j = 0; j < k2; ++j) rhs(k1 + j) = labeled_rhs(c.labeled2(), mapsB[j]);

  const Vector a = pseudo_inverse(gram) * rhs;

  double check_worst = 0.0;
  if (opt.cross_check) {
    // The population identity E[phi_j . Y] = E[phi_j . phi_A] gives an
    // independent route to the domain-1 cross moments; disagreement
    // beyond Monte-Carlo noise means the two sample sets are
    // inconsistent with each other.
    const Predictor phi_a = fit_basis(c.labeled1(), mapsA, 1);
    for (std::size_t j = 0; j < k1; ++j) {
      double mean1 = 0.0, var1 = 0.0, mean2 = 0.0, var2 = 0.0;
      std::vector<double> s1, s2;
      for (const auto& p : c.labeled1()) s1.push_back(mapsA[j].fn(p.x).dot(p.y));
      for (const auto& x : u1) s2.push_back(mapsA[j].fn(x).dot(phi_a(x)));
      for (double v : s1) mean1 += v;
      mean1 /= static_cast<double>(s1.size());
      for (double v : s2) mean2 += v;
      mean2 /= static_cast<double>(s2.size());
      for (double v : s1) var1 += (v - mean1) * (v - mean1);
      var1 /= static_cast<double>(s1.size());
      for (double v : s2) var2 += (v - mean2) * (v - mean2);
      var2 /= static_cast<double>(s2.size());
      const double se = std::sqrt(var1 / static_cast<double>(s1.size())) +
                        std::sqrt(var2 / static_cast<double>(s2.size())) + 1e-12;
      const double standardized = std::abs(mean1 - mean2) / se;
      check_worst = std::max(check_worst, standardized);
      if (standardized > opt.cross_check_multiplier)
        throw numeric_error(
            "fuse_basis_basis: cross-moment self-check failed for domain-1 map " +
            std::to_string(j) + " (labeled and unlabeled sets are statistically inconsistent)");
    }
  }

  std::vector<Predictor> terms{
      Predictor(std::make_shared<BasisNode>(mapsA, a.head(k1).eval(), c.dims().m1, 1)),
      Predictor(std::make_shared<BasisNode>(mapsB, a.tail(k2).eval(), c.dims().m2, 2))};
  Predictor out = sum_predictors(std::move(terms), Arity::TwoDomain);
  if (opt.cross_check) out = out.with_diagnostic("cross_check_worst_standardized", check_worst);
  return out;
}

namespace detail {

template <class Fn>
auto fusion_stage(const std::string& op, const std::string& stage, Fn fn) {
  try {
    return fn();
  } catch (const data_error& e) {
    throw data_error(op + " stage '" + stage + "': " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error(op + " stage '" + stage + "': " + e.what());
  }
}

}  // namespace detail

// Partially linear estimator: kernel fit of E[Y|X1] plus a linear gain
// on the innovation W = X2 - E[X2|X1]. Three estimation stages, each
// named in errors it raises.
inline Predictor fuse_plmmse(const TrainingCorpus& c, const FusionOptions& opt = {}) {
  if (c.labeled1().size() < 2)
    throw data_error("fuse_plmmse: needs at least two labeled domain-1 samples");
  if (c.labeled2().empty()) throw data_error("fuse_plmmse: needs labeled domain-2 samples");
  if (c.unlabeled().size() < 2) throw data_error("fuse_plmmse: needs at least two unlabeled pairs");

  const Predictor xi = detail::fusion_stage("fuse_plmmse", "conditional mean of x2 given x1", [&] {
    std::vector<LabeledPair> pairs;
    pairs.reserve(c.unlabeled().size());
    for (const auto& p : c.unlabeled()) pairs.push_back({p.x1, p.x2});
    return fit_kernel(pairs, opt.kernel, 1);
  });

  const Matrix gamma_ww = detail::fusion_stage("fuse_plmmse", "innovation covariance", [&] {
    Matrix acc = Matrix::Zero(c.dims().m2, c.dims().m2);
    for (const auto& p : c.unlabeled()) {
      const Vector w = p.x2 - xi(p.x1);
      acc.noalias() += w * w.transpose();
    }
    return Matrix(acc / static_cast<double>(c.unlabeled().size()));
  });

  const Matrix gamma_yw = detail::fusion_stage("fuse_plmmse", "innovation cross moment", [&] {
    auto x_of = [](const LabeledPair& p) { return p.x; };
    auto y_of = [](const LabeledPair& p) { return p.y; };
    const Matrix gamma_yx2 = mean_outer(c.labeled2(), y_of, x_of, "labeled2 moments");
    const Matrix gamma_yxi =
        mean_outer(c.labeled1(), y_of, [&](const LabeledPair& p) { return Vector(xi(p.x)); },
                   "labeled1 moments");
    return Matrix(gamma_yx2 - gamma_yxi);
  });

  const Predictor cond_mean =
      detail::fusion_stage("fuse_plmmse", "conditional mean of y given x1",
                           [&] { return fit_kernel(c.labeled1(), opt.kernel, 1); });

  const Matrix gain = gamma_yw * pseudo_inverse(gamma_ww);
  return sum_predictors(
      {lift(cond_mean), Predictor(std::make_shared<ResidualGainNode>(xi, gain))},
      Arity::TwoDomain);
}

// The innovation estimator: regressors of each psi_k(X2) on X1 within
// classA (fit on the unlabeled set), plus scalar coefficients
// a = pinv(G_rr) G_ry with G_ry split across the two labeled sets.
struct InnovationPredictor {
  std::vector<FeatureMap> maps;
  std::vector<Predictor> components;
  Vector coefficients;
  int maps_input_dim = 0;

  Predictor as_predictor() const {
    return Predictor(
        std::make_shared<InnovationNode>(maps, maps_input_dim, components, coefficients));
  }
};

inline InnovationPredictor fit_innovation(const TrainingCorpus& c, const FunctionClass& classA,
                                          const std::vector<FeatureMap>& mapsB) {
  if (classA.kind() == ClassKind::Zero)
    throw data_error("fit_innovation: classA must be Linear, Basis or Nonparametric");
  if (mapsB.empty()) throw data_error("fit_innovation: no basis maps");
  if (c.unlabeled().size() < 2)
    throw data_error("fit_innovation: needs at least two unlabeled pairs");
  if (c.labeled1().empty() || c.labeled2().empty())
    throw data_error("fit_innovation: needs samples in both labeled sets");
  const int n_dim = c.dims().n;
  const std::size_t u = c.unlabeled().size();
  const std::size_t kcount = mapsB.size();

  InnovationPredictor out;
  out.maps = mapsB;
  out.maps_input_dim = c.dims().m2;

  std::vector<Matrix> rho(kcount);  // innovation values on the unlabeled set
  for (std::size_t k = 0; k < kcount; ++k) {
    const FeatureMap& psi = mapsB[k];
    if (psi.output_dim != n_dim)
      throw data_error("fit_innovation: map " + std::to_string(k) +
                       " output dimension does not match target dimension");
    std::vector<LabeledPair> pairs;
    pairs.reserve(u);
    for (const auto& p : c.unlabeled()) pairs.push_back({p.x1, psi.fn(p.x2)});
    Predictor eta = fit_class(pairs, classA, 1);
    Matrix r(u, n_dim);
    for (std::size_t i = 0; i < u; ++i) {
      const auto& p = c.unlabeled()[i];
      r.row(static_cast<Eigen::Index>(i)) = psi.fn(p.x2) - eta(p.x1);
    }
    rho[k] = std::move(r);
    out.components.push_back(std::move(eta));
  }

  Matrix gram(kcount, kcount);
  for (std::size_t j = 0; j < kcount; ++j)
    for (std::size_t k = j; k < kcount; ++k)
      gram(j, k) = gram(k, j) =
          (rho[j].array() * rho[k].array()).sum() / static_cast<double>(u);

  Vector rhs(kcount);
  for (std::size_t k = 0; k < kcount; ++k) {
    double from_l2 = 0.0;
    for (const auto& p : c.labeled2()) from_l2 += mapsB[k].fn(p.x).dot(p.y);
    from_l2 /= static_cast<double>(c.labeled2().size());
    double from_l1 = 0.0;
    for (const auto& p : c.labeled1()) from_l1 += out.components[k](p.x).dot(p.y);
    from_l1 /= static_cast<double>(c.labeled1().size());
    rhs(k) = from_l2 - from_l1;
  }

  // Innovations that cancel to rounding noise relative to their psi_k
  // are the zero function; solving over them would amplify noise.
  std::vector<Eigen::Index> alive;
  for (std::size_t k = 0; k < kcount; ++k) {
    double psi_norm2 = 0.0;
    for (const auto& p : c.unlabeled()) psi_norm2 += mapsB[k].fn(p.x2).squaredNorm();
    psi_norm2 /= static_cast<double>(u);
    if (gram(k, k) > 1e-24 * psi_norm2) alive.push_back(static_cast<Eigen::Index>(k));
  }
  out.coefficients = Vector::Zero(kcount);
  if (!alive.empty()) {
    Matrix g(alive.size(), alive.size());
    Vector r(alive.size());
    for (std::size_t j = 0; j < alive.size(); ++j) {
      r(static_cast<Eigen::Index>(j)) = rhs(alive[j]);
      for (std::size_t k = 0; k < alive.size(); ++k)
        g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
            gram(alive[j], alive[k]);
    }
    const Vector a = pseudo_inverse(g) * r;
    for (std::size_t j = 0; j < alive.size(); ++j)
      out.coefficients(alive[j]) = a(static_cast<Eigen::Index>(j));
  }
  return out;
}

// Kernel fit of E[Y|X1] plus the all-functions innovation of the given
// basis maps; the two-stage semiparametric estimator.
inline Predictor fuse_semiparametric(const TrainingCorpus& c, const std::vector<FeatureMap>& mapsB,
                                     const FusionOptions& opt = {}) {
  if (c.labeled1().size() < 2)
    throw data_error("fuse_semiparametric: needs at least two labeled domain-1 samples");
  const Predictor cond_mean =
      detail::fusion_stage("fuse_semiparametric", "conditional mean of y given x1",
                           [&] { return fit_kernel(c.labeled1(), opt.kernel, 1); });
  const InnovationPredictor inn =
      detail::fusion_stage("fuse_semiparametric", "innovation fit", [&] {
        return fit_innovation(c, FunctionClass::nonparametric(opt.kernel), mapsB);
      });
  return sum_predictors({lift(cond_mean), inn.as_predictor()}, Arity::TwoDomain);
}

// Strategy dispatch for the fused estimator over C = A + B.
inline Predictor fuse(const TrainingCorpus& c, const FusionPlan& plan,
                      const FusionOptions& opt = {}) {
  const FusionDispatch d = strategy_for(plan.classA, plan.classB);
  if (d.strategy == FusionStrategy::DoubleNonparametric)
    throw data_error(
        "out of scope: C = all functions of (X1,X2) requires paired labeled data the problem "
        "setting lacks");
  if (plan.classA.kind() != ClassKind::Zero && c.labeled1().empty())
    throw data_error("fuse: plan requires labeled domain-1 examples");
  if (plan.classB.kind() != ClassKind::Zero && c.labeled2().empty())
    throw data_error("fuse: plan requires labeled domain-2 examples");

  FusionOptions effective = opt;
  if (plan.classA.kind() == ClassKind::Nonparametric)
    effective.kernel = plan.classA.kernel_config();
  else if (plan.classB.kind() == ClassKind::Nonparametric)
    effective.kernel = plan.classB.kernel_config();

  auto as_maps = [&](const FunctionClass& cls, int input_dim) {
    return cls.kind() == ClassKind::Linear ? linear_generator_maps(input_dim, c.dims().n)
                                           : cls.basis_maps();
  };

  Predictor out;
  switch (d.strategy) {
    case FusionStrategy::DegenerateA:
      out = lift(fit_class(c.labeled2(), plan.classB, 2, c.dims().n));
      break;
    case FusionStrategy::DegenerateB:
      out = lift(fit_class(c.labeled1(), plan.classA, 1, c.dims().n));
      break;
    case FusionStrategy::LinearLinear:
      out = fuse_linear_linear(corpus_moments(c));
      break;
    case FusionStrategy::BasisBasis:
      out = fuse_basis_basis(c, as_maps(plan.classA, c.dims().m1),
                             as_maps(plan.classB, c.dims().m2), effective);
      break;
    case FusionStrategy::PartiallyLinear:
    case FusionStrategy::SemiParametric: {
      TrainingCorpus oriented = d.mirrored ? c.swapped() : c;
      const FunctionClass& finite = d.mirrored ? plan.classA : plan.classB;
      Predictor fused =
          d.strategy == FusionStrategy::PartiallyLinear
              ? fuse_plmmse(oriented, effective)
              : fuse_semiparametric(oriented, as_maps(finite, oriented.dims().m2), effective);
      out = d.mirrored ? swap_domains(fused) : fused;
      break;
    }
    case FusionStrategy::DoubleNonparametric: break;  // unreachable
  }
  out = out.with_note("strategy=" + to_string(d.strategy) +
                      (d.mirrored ? " (domains swapped)" : ""));
  return out;
}

}  // namespace fusereg
