#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fusereg/basis_ls.hpp"
#include "fusereg/numio.hpp"
#include "fusereg/predictor.hpp"

namespace fusereg {

// Marginal pmf over (x1, x2) pairs; rows of the two matrices are aligned
// with probs.
struct DiscreteMarginal {
  Matrix x1;
  Matrix x2;
  Vector probs;
};

// Finite-support joint pmf of (X1, X2, Y). Everything downstream of it
// is computed exactly (probability-weighted sums), which is what makes
// it usable as ground truth.
class DiscreteJoint {
 public:
  DiscreteJoint(std::vector<Atom> atoms, std::vector<double> probs)
      : atoms_(std::move(atoms)), probs_(std::move(probs)) {
    if (atoms_.empty()) throw data_error("DiscreteJoint: empty support");
    if (atoms_.size() != probs_.size())
      throw data_error("DiscreteJoint: support and probability counts disagree");
    dims_ = CorpusDims{static_cast<int>(atoms_[0].x1.size()),
                       static_cast<int>(atoms_[0].x2.size()),
                       static_cast<int>(atoms_[0].y.size())};
    if (dims_.m1 < 1 || dims_.m2 < 1 || dims_.n < 1)
      throw data_error("DiscreteJoint: atom components must be non-empty");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& a = atoms_[i];
      if (a.x1.size() != dims_.m1 || a.x2.size() != dims_.m2 || a.y.size() != dims_.n)
        throw data_error("DiscreteJoint: atom " + std::to_string(i) +
                         " has inconsistent dimensions");
      if (!a.x1.allFinite() || !a.x2.allFinite() || !a.y.allFinite())
        throw numeric_error("DiscreteJoint: non-finite atom " + std::to_string(i));
      if (!(probs_[i] > 0.0))
        throw data_error("DiscreteJoint: probability " + std::to_string(i) +
                         " must be positive");
      total += probs_[i];
      for (std::size_t j = 0; j < i; ++j)
        if (same_atom(atoms_[j], a))
          throw data_error("DiscreteJoint: duplicate support atom " + std::to_string(i));
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw data_error("DiscreteJoint: probabilities sum to " + std::to_string(total) +
                       ", expected 1");
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }
  const CorpusDims& dims() const { return dims_; }

  DiscreteJoint swapped() const {
    std::vector<Atom> sw;
    sw.reserve(atoms_.size());
    for (const Atom& a : atoms_) sw.push_back({a.x2, a.x1, a.y});
    return DiscreteJoint(std::move(sw), probs_);
  }

  // Marginal over (x1, x2), merging atoms that differ only in y.
  DiscreteMarginal marginal12() const {
    std::vector<std::pair<Vector, Vector>> keys;
    std::vector<double> ps;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      bool merged = false;
      for (std::size_t j = 0; j < keys.size(); ++j) {
        if (exact_equal(keys[j].first, atoms_[i].x1) && exact_equal(keys[j].second, atoms_[i].x2)) {
          ps[j] += probs_[i];
          merged = true;
          break;
        }
      }
      if (!merged) {
        keys.emplace_back(atoms_[i].x1, atoms_[i].x2);
        ps.push_back(probs_[i]);
      }
    }
    DiscreteMarginal m;
    m.x1 = Matrix(keys.size(), dims_.m1);
    m.x2 = Matrix(keys.size(), dims_.m2);
    m.probs = Vector(keys.size());
    for (std::size_t j = 0; j < keys.size(); ++j) {
      m.x1.row(static_cast<Eigen::Index>(j)) = keys[j].first;
      m.x2.row(static_cast<Eigen::Index>(j)) = keys[j].second;
      m.probs(static_cast<Eigen::Index>(j)) = ps[j];
    }
    return m;
  }

  // Text table: a dims line, then one support atom per line with its
  // coordinates followed by the probability. '#' starts a comment.
  std::string serialize() const {
    std::ostringstream out;
    out << "# discrete joint pmf: x1 x2 y probability\n";
    out << "dims " << dims_.m1 << " " << dims_.m2 << " " << dims_.n << "\n";
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const Atom& a = atoms_[i];
      for (Eigen::Index k = 0; k < a.x1.size(); ++k) out << format_double(a.x1(k)) << " ";
      for (Eigen::Index k = 0; k < a.x2.size(); ++k) out << format_double(a.x2(k)) << " ";
      for (Eigen::Index k = 0; k < a.y.size(); ++k) out << format_double(a.y(k)) << " ";
      out << format_double(probs_[i]) << "\n";
    }
    return out.str();
  }

  static DiscreteJoint parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::optional<CorpusDims> dims;
    std::vector<Atom> atoms;
    std::vector<double> probs;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (std::size_t hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
      std::istringstream fields(line);
      std::vector<std::string> toks;
      for (std::string t; fields >> t;) toks.push_back(t);
      if (toks.empty()) continue;
      const std::string ctx = "discrete joint line " + std::to_string(lineno);
      if (!dims) {
        if (toks.size() != 4 || toks[0] != "dims")
          throw data_error(ctx + ": expected 'dims m1 m2 n'");
        dims = CorpusDims{static_cast<int>(parse_double(toks[1], ctx)),
                          static_cast<int>(parse_double(toks[2], ctx)),
                          static_cast<int>(parse_double(toks[3], ctx))};
        continue;
      }
      const std::size_t want = static_cast<std::size_t>(dims->m1 + dims->m2 + dims->n) + 1;
      if (toks.size() != want)
        throw data_error(ctx + ": expected " + std::to_string(want) + " fields, got " +
                         std::to_string(toks.size()));
      Atom a;
      a.x1 = Vector(dims->m1);
      a.x2 = Vector(dims->m2);
      a.y = Vector(dims->n);
      std::size_t t = 0;
      for (int k = 0; k < dims->m1; ++k) a.x1(k) = parse_double(toks[t++], ctx);
      for (int k = 0; k < dims->m2; ++k) a.x2(k) = parse_double(toks[t++], ctx);
      for (int k = 0; k < dims->n; ++k) a.y(k) = parse_double(toks[t++], ctx);
      atoms.push_back(std::move(a));
      probs.push_back(parse_double(toks[t], ctx));
    }
    if (!dims) throw data_error("discrete joint: missing dims line");
    return DiscreteJoint(std::move(atoms), std::move(probs));
  }

  static bool exact_equal(const Vector& a, const Vector& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
  }
  static bool same_atom(const Atom& a, const Atom& b) {
    return exact_equal(a.x1, b.x1) && exact_equal(a.x2, b.x2) && exact_equal(a.y, b.y);
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> probs_;
  CorpusDims dims_;
};

namespace detail {

inline const Vector& domain_value(const Atom& a, int domain) {
  return domain == 1 ? a.x1 : a.x2;
}

inline Matrix distinct_domain_values(const DiscreteJoint& dj, int domain) {
  std::vector<Vector> vals;
  for (const Atom& a : dj.atoms()) {
    const Vector& v = domain_value(a, domain);
    bool seen = false;
    for (const Vector& u : vals)
      if (DiscreteJoint::exact_equal(u, v)) {
        seen = true;
        break;
      }
    if (!seen) vals.push_back(v);
  }
  Matrix out(vals.size(), vals[0].size());
  for (std::size_t i = 0; i < vals.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = vals[i];
  return out;
}

inline Matrix unflatten_linear(const Vector& a, int out_dim, int in_dim) {
  Matrix b(out_dim, in_dim);
  for (int r = 0; r < out_dim; ++r)
    for (int c = 0; c < in_dim; ++c) b(r, c) = a(r * in_dim + c);
  return b;
}

}  // namespace detail

// Indicator maps 1{x == v} e_r over a finite support; they span all
// functions on that support, making the "all functions" class finite
// dimensional for exact solves.
inline std::vector<FeatureMap> indicator_maps(const Matrix& support_values, int output_dim) {
  std::vector<FeatureMap> maps;
  for (Eigen::Index i = 0; i < support_values.rows(); ++i) {
    const Vector v = support_values.row(i).transpose();
    for (int r = 0; r < output_dim; ++r) {
      FeatureMap m;
      m.output_dim = output_dim;
      m.fn = [v, output_dim, r](const Vector& x) {
        Vector out = Vector::Zero(output_dim);
        if (x.size() == v.size() && (x.array() == v.array()).all()) out(r) = 1.0;
        return out;
      };
      maps.push_back(std::move(m));
    }
  }
  return maps;
}

// Finite generators of a class relative to a support. Nonparametric
// becomes the indicator basis over the distinct support values.
inline std::vector<FeatureMap> generator_maps_on_support(const FunctionClass& cls,
                                                         const Matrix& distinct_values,
                                                         int input_dim, int output_dim) {
  if (cls.kind() == ClassKind::Nonparametric) return indicator_maps(distinct_values, output_dim);
  return class_generator_maps(cls, input_dim, output_dim);
}

// Probability-weighted least squares of an arbitrary per-atom target
// over a function class of one domain, solved exactly on the support.
inline Predictor exact_class_regress(const DiscreteJoint& dj, int domain,
                                     const FunctionClass& cls,
                                     const std::function<Vector(const Atom&)>& target,
                                     int target_dim) {
  if (domain != 1 && domain != 2) throw data_error("exact_class_regress: domain must be 1 or 2");
  const int input_dim = domain == 1 ? dj.dims().m1 : dj.dims().m2;
  const std::size_t natoms = dj.atoms().size();

  if (cls.kind() == ClassKind::Zero)
    return make_zero_predictor(target_dim, Arity::OneDomain, domain);

  if (cls.kind() == ClassKind::Nonparametric) {
    // Exact conditional mean per distinct support point.
    const Matrix keys = detail::distinct_domain_values(dj, domain);
    Matrix values = Matrix::Zero(keys.rows(), target_dim);
    Vector mass = Vector::Zero(keys.rows());
    for (std::size_t i = 0; i < natoms; ++i) {
      const Vector& v = detail::domain_value(dj.atoms()[i], domain);
      for (Eigen::Index k = 0; k < keys.rows(); ++k) {
        if ((keys.row(k).transpose().array() == v.array()).all()) {
          const Vector t = target(dj.atoms()[i]);
          if (t.size() != target_dim)
            throw data_error("exact_class_regress: target dimension mismatch");
          values.row(k) += dj.probs()[i] * t.transpose();
          mass(k) += dj.probs()[i];
          break;
        }
      }
    }
    for (Eigen::Index k = 0; k < keys.rows(); ++k) values.row(k) /= mass(k);
    return Predictor(std::make_shared<TableNode>(keys, values, domain));
  }

  if (cls.kind() == ClassKind::Linear) {
    // Weighted moment route, matching fit_linear's normal equations.
    Matrix gamma_yx = Matrix::Zero(target_dim, input_dim);
    Matrix gamma_xx = Matrix::Zero(input_dim, input_dim);
    for (std::size_t i = 0; i < natoms; ++i) {
      const Vector& x = detail::domain_value(dj.atoms()[i], domain);
      const Vector t = target(dj.atoms()[i]);
      if (t.size() != target_dim)
        throw data_error("exact_class_regress: target dimension mismatch");
      gamma_yx.noalias() += dj.probs()[i] * t * x.transpose();
      gamma_xx.noalias() += dj.probs()[i] * x * x.transpose();
    }
    return make_linear_predictor(gamma_yx * pseudo_inverse(gamma_xx), domain);
  }

  // Basis class: weighted scalar-coefficient least squares.
  const std::vector<FeatureMap>& maps = cls.basis_maps();
  std::vector<Vector> inputs;
  inputs.reserve(natoms);
  Matrix targets(natoms, target_dim);
  Vector weights(natoms);
  for (std::size_t i = 0; i < natoms; ++i) {
    inputs.push_back(detail::domain_value(dj.atoms()[i], domain));
    const Vector t = target(dj.atoms()[i]);
    if (t.size() != target_dim)
      throw data_error("exact_class_regress: target dimension mismatch");
    targets.row(static_cast<Eigen::Index>(i)) = t;
    weights(static_cast<Eigen::Index>(i)) = dj.probs()[i];
  }
  ScalarCoeffProblem prob{evaluate_feature_maps(maps, inputs), std::move(targets),
                          std::move(weights)};
  const ScalarCoeffSolution sol = solve_scalar_coeff_ls(prob);
  return Predictor(std::make_shared<BasisNode>(maps, sol.coefficients, input_dim, domain));
}

inline Predictor exact_class_optimal(const DiscreteJoint& dj, int domain,
                                     const FunctionClass& cls) {
  return exact_class_regress(
      dj, domain, cls, [](const Atom& a) { return a.y; }, dj.dims().n);
}

// Exact innovation estimator: for each map psi_k of x2, regress
// psi_k(X2) on X1 within classA, then fit scalar coefficients on the
// differences psi_k(x2) - eta_k(x1) against y.
inline Predictor exact_innovation(const DiscreteJoint& dj, const FunctionClass& classA,
                                  const std::vector<FeatureMap>& mapsB) {
  if (mapsB.empty()) throw data_error("exact_innovation: no basis maps");
  const int n_dim = dj.dims().n;
  const std::size_t natoms = dj.atoms().size();
  std::vector<Predictor> etas;
  std::vector<Matrix> features;
  for (std::size_t k = 0; k < mapsB.size(); ++k) {
    const FeatureMap& psi = mapsB[k];
    if (psi.output_dim != n_dim)
      throw data_error("exact_innovation: map " + std::to_string(k) +
                       " output dimension mismatch");
    Predictor eta = exact_class_regress(
        dj, 1, classA, [&psi](const Atom& a) { return psi.fn(a.x2); }, n_dim);
    Matrix f(natoms, n_dim);
    for (std::size_t i = 0; i < natoms; ++i) {
      const Atom& a = dj.atoms()[i];
      f.row(static_cast<Eigen::Index>(i)) = psi.fn(a.x2) - eta(a.x1);
    }
    etas.push_back(std::move(eta));
    features.push_back(std::move(f));
  }
  Matrix targets(natoms, n_dim);
  Vector weights(natoms);
  for (std::size_t i = 0; i < natoms; ++i) {
    targets.row(static_cast<Eigen::Index>(i)) = dj.atoms()[i].y;
    weights(static_cast<Eigen::Index>(i)) = dj.probs()[i];
  }
  // An innovation that cancels to rounding noise relative to its psi_k
  // is the zero function and must not enter the solve.
  Vector floor(mapsB.size());
  for (std::size_t k = 0; k < mapsB.size(); ++k) {
    double psi_norm2 = 0.0;
    for (std::size_t i = 0; i < natoms; ++i)
      psi_norm2 += dj.probs()[i] * mapsB[k].fn(dj.atoms()[i].x2).squaredNorm();
    floor(static_cast<Eigen::Index>(k)) = 1e-24 * psi_norm2;
  }
  ScalarCoeffProblem prob{std::move(features), std::move(targets), std::move(weights),
                          std::move(floor)};
  const ScalarCoeffSolution sol = solve_scalar_coeff_ls(prob);
  return Predictor(std::make_shared<InnovationNode>(mapsB, dj.dims().m2, std::move(etas),
                                                    sol.coefficients));
}

// Exact minimizer of E||Y - a(x1) - b(x2)||^2 over the sum class
// C = A + B on the support. Pairs with an all-functions class go through
// the innovation decomposition; finite pairs are a joint least squares.
inline Predictor exact_minimax(const DiscreteJoint& dj, const FunctionClass& classA,
                               const FunctionClass& classB) {
  const int n_dim = dj.dims().n;
  if (classA.kind() == ClassKind::Nonparametric && classB.kind() == ClassKind::Nonparametric)
    throw data_error(
        "out of scope: C = all functions of (X1,X2) requires paired labeled data the problem "
        "setting lacks");
  if (classA.kind() == ClassKind::Zero && classB.kind() == ClassKind::Zero)
    return make_zero_predictor(n_dim, Arity::TwoDomain);
  if (classB.kind() == ClassKind::Zero) return lift(exact_class_optimal(dj, 1, classA));
  if (classA.kind() == ClassKind::Zero) return lift(exact_class_optimal(dj, 2, classB));

  if (classA.kind() == ClassKind::Nonparametric) {
    const Predictor phi = exact_class_optimal(dj, 1, classA);
    const std::vector<FeatureMap> mapsB = class_generator_maps(classB, dj.dims().m2, n_dim);
    const Predictor inn = exact_innovation(dj, classA, mapsB);
    return sum_predictors({lift(phi), inn}, Arity::TwoDomain);
  }
  if (classB.kind() == ClassKind::Nonparametric)
    return swap_domains(exact_minimax(dj.swapped(), classB, classA));

  // Both classes finite: one joint scalar least squares over stacked maps.
  const std::vector<FeatureMap> mapsA = class_generator_maps(classA, dj.dims().m1, n_dim);
  const std::vector<FeatureMap> mapsB = class_generator_maps(classB, dj.dims().m2, n_dim);
  const std::size_t natoms = dj.atoms().size();
  std::vector<Vector> x1s, x2s;
  Matrix targets(natoms, n_dim);
  Vector weights(natoms);
  for (std::size_t i = 0; i < natoms; ++i) {
    x1s.push_back(dj.atoms()[i].x1);
    x2s.push_back(dj.atoms()[i].x2);
    targets.row(static_cast<Eigen::Index>(i)) = dj.atoms()[i].y;
    weights(static_cast<Eigen::Index>(i)) = dj.probs()[i];
  }
  std::vector<Matrix> features = evaluate_feature_maps(mapsA, x1s);
  for (Matrix& f : evaluate_feature_maps(mapsB, x2s)) features.push_back(std::move(f));
  ScalarCoeffProblem prob{std::move(features), std::move(targets), std::move(weights)};
  const ScalarCoeffSolution sol = solve_scalar_coeff_ls(prob);
  const Vector a1 = sol.coefficients.head(static_cast<Eigen::Index>(mapsA.size()));
  const Vector a2 = sol.coefficients.tail(static_cast<Eigen::Index>(mapsB.size()));

  auto term = [&](const FunctionClass& cls, const std::vector<FeatureMap>& maps, const Vector& a,
                  int domain, int input_dim) {
    if (cls.kind() == ClassKind::Linear)
      return make_linear_predictor(detail::unflatten_linear(a, n_dim, input_dim), domain);
    return Predictor(std::make_shared<BasisNode>(maps, a, input_dim, domain));
  };
  return sum_predictors({term(classA, mapsA, a1, 1, dj.dims().m1),
                         term(classB, mapsB, a2, 2, dj.dims().m2)},
                        Arity::TwoDomain);
}

// Same objective solved without the innovation shortcut: all-functions
// classes are expanded into indicator bases and everything goes through
// one joint least squares. Exists to cross-check exact_minimax.
inline Predictor exact_minimax_direct(const DiscreteJoint& dj, const FunctionClass& classA,
                                      const FunctionClass& classB) {
  const int n_dim = dj.dims().n;
  if (classB.kind() == ClassKind::Zero) return lift(exact_class_optimal(dj, 1, classA));
  if (classA.kind() == ClassKind::Zero) return lift(exact_class_optimal(dj, 2, classB));
  const std::vector<FeatureMap> mapsA = generator_maps_on_support(
      classA, detail::distinct_domain_values(dj, 1), dj.dims().m1, n_dim);
  const std::vector<FeatureMap> mapsB = generator_maps_on_support(
      classB, detail::distinct_domain_values(dj, 2), dj.dims().m2, n_dim);
  const std::size_t natoms = dj.atoms().size();
  std::vector<Vector> x1s, x2s;
  Matrix targets(natoms, n_dim);
  Vector weights(natoms);
  for (std::size_t i = 0; i < natoms; ++i) {
    x1s.push_back(dj.atoms()[i].x1);
    x2s.push_back(dj.atoms()[i].x2);
    targets.row(static_cast<Eigen::Index>(i)) = dj.atoms()[i].y;
    weights(static_cast<Eigen::Index>(i)) = dj.probs()[i];
  }
  std::vector<Matrix> features = evaluate_feature_maps(mapsA, x1s);
  for (Matrix& f : evaluate_feature_maps(mapsB, x2s)) features.push_back(std::move(f));
  ScalarCoeffProblem prob{std::move(features), std::move(targets), std::move(weights)};
  const ScalarCoeffSolution sol = solve_scalar_coeff_ls(prob);
  const Vector a1 = sol.coefficients.head(static_cast<Eigen::Index>(mapsA.size()));
  const Vector a2 = sol.coefficients.tail(static_cast<Eigen::Index>(mapsB.size()));
  return sum_predictors(
      {Predictor(std::make_shared<BasisNode>(mapsA, a1, dj.dims().m1, 1)),
       Predictor(std::make_shared<BasisNode>(mapsB, a2, dj.dims().m2, 2))},
      Arity::TwoDomain);
}

inline double exact_mse(const DiscreteJoint& dj, const Predictor& p) {
  double mse = 0.0;
  for (std::size_t i = 0; i < dj.atoms().size(); ++i)
    mse += dj.probs()[i] * (dj.atoms()[i].y - predict_atom(p, dj.atoms()[i])).squaredNorm();
  return mse;
}

inline double exact_second_moment(const DiscreteJoint& dj) {
  double m = 0.0;
  for (std::size_t i = 0; i < dj.atoms().size(); ++i)
    m += dj.probs()[i] * dj.atoms()[i].y.squaredNorm();
  return m;
}

// E[Y | X1, X2] evaluated at each atom, exactly.
inline std::vector<Vector> exact_joint_conditional_mean(const DiscreteJoint& dj) {
  const std::size_t natoms = dj.atoms().size();
  std::vector<Vector> out(natoms);
  std::vector<bool> done(natoms, false);
  for (std::size_t i = 0; i < natoms; ++i) {
    if (done[i]) continue;
    Vector num = Vector::Zero(dj.dims().n);
    double den = 0.0;
    std::vector<std::size_t> group;
    for (std::size_t j = i; j < natoms; ++j) {
      if (done[j]) continue;
      if (DiscreteJoint::exact_equal(dj.atoms()[j].x1, dj.atoms()[i].x1) &&
          DiscreteJoint::exact_equal(dj.atoms()[j].x2, dj.atoms()[i].x2)) {
        num += dj.probs()[j] * dj.atoms()[j].y;
        den += dj.probs()[j];
        group.push_back(j);
      }
    }
    for (std::size_t j : group) {
      out[j] = num / den;
      done[j] = true;
    }
  }
  return out;
}

// Regret relative to the unrestricted conditional mean, computed as the
// mean squared distance to it.
inline double exact_regret(const DiscreteJoint& dj, const Predictor& p) {
  const std::vector<Vector> cm = exact_joint_conditional_mean(dj);
  double reg = 0.0;
  for (std::size_t i = 0; i < dj.atoms().size(); ++i)
    reg += dj.probs()[i] * (predict_atom(p, dj.atoms()[i]) - cm[i]).squaredNorm();
  return reg;
}

// Exact conditional expectation of any predictor given one domain,
// returned as a lookup table over that domain's support.
inline Predictor exact_project(const DiscreteJoint& dj, const Predictor& p, int onto_domain = 1) {
  const Matrix keys = detail::distinct_domain_values(dj, onto_domain);
  const int out_dim = p.output_dim();
  Matrix values = Matrix::Zero(keys.rows(), out_dim);
  Vector mass = Vector::Zero(keys.rows());
  for (std::size_t i = 0; i < dj.atoms().size(); ++i) {
    const Vector& v = detail::domain_value(dj.atoms()[i], onto_domain);
    for (Eigen::Index k = 0; k < keys.rows(); ++k) {
      if ((keys.row(k).transpose().array() == v.array()).all()) {
        values.row(k) += dj.probs()[i] * predict_atom(p, dj.atoms()[i]).transpose();
        mass(k) += dj.probs()[i];
        break;
      }
    }
  }
  for (Eigen::Index k = 0; k < keys.rows(); ++k) values.row(k) /= mass(k);
  return Predictor(std::make_shared<TableNode>(keys, values, onto_domain));
}

// Pushforward of the pmf under y -> 2 rho(x1,x2) - y. Stays inside the
// same feasible family as the original distribution when rho is the
// exact sum-class optimum. Colliding atoms are merged by exact
// coordinate equality.
inline DiscreteJoint reflect(const DiscreteJoint& dj, const Predictor& rho) {
  std::vector<Atom> atoms;
  std::vector<double> probs;
  for (std::size_t i = 0; i < dj.atoms().size(); ++i) {
    Atom a = dj.atoms()[i];
    a.y = 2.0 * predict_atom(rho, dj.atoms()[i]) - a.y;
    bool merged = false;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (DiscreteJoint::same_atom(atoms[j], a)) {
        probs[j] += dj.probs()[i];
        merged = true;
        break;
      }
    }
    if (!merged) {
      atoms.push_back(std::move(a));
      probs.push_back(dj.probs()[i]);
    }
  }
  return DiscreteJoint(std::move(atoms), std::move(probs));
}

// Second-moment description of an (x1, x2) marginal, for Monte-Carlo
// membership checks on sampled data.
struct MarginalMoments {
  Matrix gamma_11;
  Matrix gamma_12;
  Matrix gamma_22;
};

// What is assumed known about the joint distribution: the class-optimal
// single-domain predictors, the (x1,x2) marginal, and the target's
// second moment. Exact checks use marginal12; Monte-Carlo checks use
// marginal_moments.
struct FeasibleFamilySpec {
  FunctionClass classA = FunctionClass::linear();
  FunctionClass classB = FunctionClass::linear();
  Predictor phi_A;
  Predictor psi_B;
  std::optional<DiscreteMarginal> marginal12;
  std::optional<MarginalMoments> marginal_moments;
  double c = 0.0;
};

inline FeasibleFamilySpec family_of(const DiscreteJoint& dj, const FunctionClass& classA,
                                    const FunctionClass& classB) {
  FeasibleFamilySpec spec;
  spec.classA = classA;
  spec.classB = classB;
  spec.phi_A = exact_class_optimal(dj, 1, classA);
  spec.psi_B = exact_class_optimal(dj, 2, classB);
  spec.marginal12 = dj.marginal12();
  MarginalMoments mm;
  mm.gamma_11 = Matrix::Zero(dj.dims().m1, dj.dims().m1);
  mm.gamma_12 = Matrix::Zero(dj.dims().m1, dj.dims().m2);
  mm.gamma_22 = Matrix::Zero(dj.dims().m2, dj.dims().m2);
  for (std::size_t i = 0; i < dj.atoms().size(); ++i) {
    const Atom& a = dj.atoms()[i];
    mm.gamma_11.noalias() += dj.probs()[i] * a.x1 * a.x1.transpose();
    mm.gamma_12.noalias() += dj.probs()[i] * a.x1 * a.x2.transpose();
    mm.gamma_22.noalias() += dj.probs()[i] * a.x2 * a.x2.transpose();
  }
  spec.marginal_moments = mm;
  spec.c = exact_second_moment(dj);
  return spec;
}

struct MembershipVerdict {
  bool member = false;
  double residual_a = 0.0;
  double residual_b = 0.0;
  double residual_marginal = 0.0;
  double residual_second_moment = 0.0;
  std::string failing;  // empty when member
};

namespace detail {

// Largest orthogonality violation of (target - fit) against the class
// generators under the pmf. For the all-functions class this is the
// conditional-mean residual per support point.
inline double exact_optimality_residual(const DiscreteJoint& dj, int domain,
                                        const FunctionClass& cls, const Predictor& fit) {
  const int n_dim = dj.dims().n;
  const std::size_t natoms = dj.atoms().size();
  if (cls.kind() == ClassKind::Zero) {
    double m = 0.0;
    for (std::size_t i = 0; i < natoms; ++i)
      m += dj.probs()[i] * predict_atom(fit, dj.atoms()[i]).squaredNorm();
    return m;
  }
  if (cls.kind() == ClassKind::Nonparametric) {
    const Matrix keys = distinct_domain_values(dj, domain);
    Matrix resid = Matrix::Zero(keys.rows(), n_dim);
    Vector mass = Vector::Zero(keys.rows());
    for (std::size_t i = 0; i < natoms; ++i) {
      const Vector& v = domain_value(dj.atoms()[i], domain);
      for (Eigen::Index k = 0; k < keys.rows(); ++k) {
        if ((keys.row(k).transpose().array() == v.array()).all()) {
          resid.row(k) +=
              dj.probs()[i] * (dj.atoms()[i].y - predict_atom(fit, dj.atoms()[i])).transpose();
          mass(k) += dj.probs()[i];
          break;
        }
      }
    }
    double worst = 0.0;
    for (Eigen::Index k = 0; k < keys.rows(); ++k)
      worst = std::max(worst, (resid.row(k) / mass(k)).cwiseAbs().maxCoeff());
    return worst;
  }
  const int input_dim = domain == 1 ? dj.dims().m1 : dj.dims().m2;
  const std::vector<FeatureMap> gens = class_generator_maps(cls, input_dim, n_dim);
  double worst = 0.0;
  for (const FeatureMap& g : gens) {
    double acc = 0.0;
    for (std::size_t i = 0; i < natoms; ++i) {
      const Atom& a = dj.atoms()[i];
      acc += dj.probs()[i] *
             (a.y - predict_atom(fit, a)).dot(g.fn(domain_value(a, domain)));
    }
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace detail

// Verifies the four feasibility conditions exactly on the support:
// A-optimality of phi_A, B-optimality of psi_B, the (x1,x2) marginal,
// and E||Y||^2 = c. Optimality is checked through the orthogonality
// conditions; the supplied predictors are assumed to lie in their
// classes (they do when produced by family_of).
inline MembershipVerdict check_membership(const DiscreteJoint& dj, const FeasibleFamilySpec& spec,
                                          double tol = 1e-9) {
  if (!spec.marginal12) throw data_error("check_membership: spec has no marginal pmf");
  MembershipVerdict v;
  v.residual_a = detail::exact_optimality_residual(dj, 1, spec.classA, spec.phi_A);
  v.residual_b = detail::exact_optimality_residual(dj, 2, spec.classB, spec.psi_B);

  const DiscreteMarginal mine = dj.marginal12();
  const DiscreteMarginal& want = *spec.marginal12;
  double worst = 0.0;
  std::vector<bool> matched(static_cast<std::size_t>(want.probs.size()), false);
  for (Eigen::Index i = 0; i < mine.probs.size(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < want.probs.size(); ++j) {
      if ((mine.x1.row(i).array() == want.x1.row(j).array()).all() &&
          (mine.x2.row(i).array() == want.x2.row(j).array()).all()) {
        worst = std::max(worst, std::abs(mine.probs(i) - want.probs(j)));
        matched[static_cast<std::size_t>(j)] = true;
        found = true;
        break;
      }
    }
    if (!found) worst = std::max(worst, mine.probs(i));
  }
  for (Eigen::Index j = 0; j < want.probs.size(); ++j)
    if (!matched[static_cast<std::size_t>(j)]) worst = std::max(worst, want.probs(j));
  v.residual_marginal = worst;

  v.residual_second_moment = std::abs(exact_second_moment(dj) - spec.c);

  if (v.residual_a > tol)
    v.failing = "a_optimality";
  else if (v.residual_b > tol)
    v.failing = "b_optimality";
  else if (v.residual_marginal > tol)
    v.failing = "marginal";
  else if (v.residual_second_moment > tol)
    v.failing = "second_moment";
  v.member = v.failing.empty();
  return v;
}

// Monte-Carlo membership check on sampled triples: every condition is a
// collection of sample means tested against multiplier * sd / sqrt(n)
// standard-error bounds. Classes must have finite generator sets here.
inline MembershipVerdict check_membership_mc(const std::vector<Atom>& samples,
                                             const FeasibleFamilySpec& spec,
                                             double multiplier = 3.0) {
  if (samples.empty()) throw data_error("check_membership_mc: no samples");
  if (!spec.marginal_moments)
    throw data_error("check_membership_mc: spec has no marginal moments");
  if (spec.classA.kind() == ClassKind::Nonparametric ||
      spec.classB.kind() == ClassKind::Nonparametric)
    throw data_error("check_membership_mc: needs finite generator sets; "
                     "use the exact check for all-functions classes");
  const std::size_t n = samples.size();
  const double root_n = std::sqrt(static_cast<double>(n));
  const int m1 = static_cast<int>(samples[0].x1.size());
  const int m2 = static_cast<int>(samples[0].x2.size());
  const int n_dim = static_cast<int>(samples[0].y.size());

  // Worst standardized deviation per condition; > multiplier means the
  // condition's bound is violated.
  auto standardized = [&](const std::function<double(const Atom&)>& summand, double target) {
    double mean = 0.0;
    for (const Atom& a : samples) mean += summand(a);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const Atom& a : samples) {
      const double d = summand(a) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double se = std::max(std::sqrt(var) / root_n, 1e-12);
    return std::make_pair(std::abs(mean - target) / se / multiplier, std::abs(mean - target));
  };

  MembershipVerdict v;
  double worst_a = 0.0, worst_b = 0.0, worst_m = 0.0;
  double std_a = 0.0, std_b = 0.0, std_m = 0.0, std_c = 0.0;

  auto gen_check = [&](const FunctionClass& cls, const Predictor& fit, int domain, double& worst,
                       double& standardized_worst) {
    if (cls.kind() == ClassKind::Zero) return;
    const int input_dim = domain == 1 ? m1 : m2;
    for (const FeatureMap& g : class_generator_maps(cls, input_dim, n_dim)) {
      auto [s, raw] = standardized(
          [&](const Atom& a) {
            const Vector& x = domain == 1 ? a.x1 : a.x2;
            return (a.y - fit(x)).dot(g.fn(x));
          },
          0.0);
      worst = std::max(worst, raw);
      standardized_worst = std::max(standardized_worst, s);
    }
  };
  gen_check(spec.classA, spec.phi_A, 1, worst_a, std_a);
  gen_check(spec.classB, spec.psi_B, 2, worst_b, std_b);
  v.residual_a = worst_a;
  v.residual_b = worst_b;

  const MarginalMoments& mm = *spec.marginal_moments;
  auto moment_check = [&](const Matrix& target, int rows, int cols, auto left, auto right) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        auto [s, raw] = standardized(
            [&](const Atom& a) { return left(a)(r) * right(a)(c); }, target(r, c));
        worst_m = std::max(worst_m, raw);
        std_m = std::max(std_m, s);
      }
    }
  };
  auto x1_of = [](const Atom& a) { return a.x1; };
  auto x2_of = [](const Atom& a) { return a.x2; };
  moment_check(mm.gamma_11, m1, m1, x1_of, x1_of);
  moment_check(mm.gamma_12, m1, m2, x1_of, x2_of);
  moment_check(mm.gamma_22, m2, m2, x2_of, x2_of);
  v.residual_marginal = worst_m;

  auto [sc, rawc] = standardized([](const Atom& a) { return a.y.squaredNorm(); }, spec.c);
  std_c = sc;
  v.residual_second_moment = rawc;

  if (std_a > 1.0)
    v.failing = "a_optimality";
  else if (std_b > 1.0)
    v.failing = "b_optimality";
  else if (std_m > 1.0)
    v.failing = "marginal";
  else if (std_c > 1.0)
    v.failing = "second_moment";
  v.member = v.failing.empty();
  return v;
}

// The two equivalent exact forms of the single-domain minimax-regret
// estimator E[rho_M | X1]: one built from phi_A plus the projected
// innovation, the other from psi_B's projection plus the projected
// reversed innovation.
inline Predictor exact_rho_s_via_phi(const DiscreteJoint& dj, const FunctionClass& classA,
                                     const FunctionClass& classB) {
  const Predictor phi = exact_class_optimal(dj, 1, classA);
  if (classB.kind() == ClassKind::Zero) return phi;  // E[phi_A|X1] = phi_A
  const std::vector<FeatureMap> mapsB = generator_maps_on_support(
      classB, detail::distinct_domain_values(dj, 2), dj.dims().m2, dj.dims().n);
  const Predictor inn = exact_innovation(dj, classA, mapsB);
  const Predictor projected = exact_project(dj, inn, 1);
  return sum_predictors({phi, projected}, Arity::OneDomain);
}

inline Predictor exact_rho_s_via_psi(const DiscreteJoint& dj, const FunctionClass& classA,
                                     const FunctionClass& classB) {
  const Predictor psi = exact_class_optimal(dj, 2, classB);
  const Predictor psi_projected = exact_project(dj, psi, 1);
  if (classA.kind() == ClassKind::Zero) return psi_projected;
  const std::vector<FeatureMap> mapsA = generator_maps_on_support(
      classA, detail::distinct_domain_values(dj, 1), dj.dims().m1, dj.dims().n);
  const Predictor inn_rev = swap_domains(exact_innovation(dj.swapped(), classB, mapsA));
  const Predictor inn_projected = exact_project(dj, inn_rev, 1);
  return sum_predictors({psi_projected, inn_projected}, Arity::OneDomain);
}

}  // namespace fusereg
