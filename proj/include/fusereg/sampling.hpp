#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "fusereg/corpus.hpp"
#include "fusereg/discrete.hpp"
#include "fusereg/gaussian.hpp"
#include "fusereg/linalg.hpp"

namespace fusereg {

// Small deterministic PRNG (splitmix64 core). Implemented here rather
// than with std::mt19937 distributions so that the "same seed, same
// bytes" contract holds across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the spare value is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Index draw from unnormalized positive weights.
  std::size_t pick(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::vector<Atom> sample_gaussian(const GaussianModel& g, std::size_t n,
                                         std::uint64_t seed) {
  validate_gaussian(g);
  if (n < 1) throw data_error("sample_gaussian: n must be at least 1");
  const Matrix root = psd_sqrt(g.sigma);
  const Eigen::Index d = g.sigma.rows();
  Rng rng(seed);
  std::vector<Atom> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.gaussian();
    const Vector v = root * z;
    Atom a;
    a.x1 = v.head(g.dims.m1);
    a.x2 = v.segment(g.dims.m1, g.dims.m2);
    a.y = v.tail(g.dims.n);
    out.push_back(std::move(a));
  }
  return out;
}

struct GaussianMixture {
  std::vector<GaussianModel> components;
  std::vector<double> weights;
};

inline void validate_mixture(const GaussianMixture& mix) {
  if (mix.components.empty()) throw data_error("GaussianMixture: no components");
  if (mix.components.size() != mix.weights.size())
    throw data_error("GaussianMixture: component and weight counts disagree");
  for (const auto& g : mix.components) {
    validate_gaussian(g);
    if (g.dims.m1 != mix.components[0].dims.m1 || g.dims.m2 != mix.components[0].dims.m2 ||
        g.dims.n != mix.components[0].dims.n)
      throw data_error("GaussianMixture: components disagree on dimensions");
  }
  for (double w : mix.weights)
    if (!(w > 0.0)) throw data_error("GaussianMixture: weights must be positive");
}

inline std::vector<Atom> sample_mixture(const GaussianMixture& mix, std::size_t n,
                                        std::uint64_t seed) {
  validate_mixture(mix);
  if (n < 1) throw data_error("sample_mixture: n must be at least 1");
  Rng rng(seed);
  std::vector<Matrix> roots;
  roots.reserve(mix.components.size());
  for (const auto& g : mix.components) roots.push_back(psd_sqrt(g.sigma));
  const CorpusDims dims = mix.components[0].dims;
  const Eigen::Index d = dims.m1 + dims.m2 + dims.n;
  std::vector<Atom> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.pick(mix.weights);
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.gaussian();
    const Vector v = roots[c] * z;
    Atom a;
    a.x1 = v.head(dims.m1);
    a.x2 = v.segment(dims.m1, dims.m2);
    a.y = v.tail(dims.n);
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Atom> sample_discrete(const DiscreteJoint& dj, std::size_t n,
                                         std::uint64_t seed) {
  if (n < 1) throw data_error("sample_discrete: n must be at least 1");
  Rng rng(seed);
  std::vector<Atom> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dj.atoms()[rng.pick(dj.probs())]);
  return out;
}

using JointModel = std::variant<GaussianModel, GaussianMixture, DiscreteJoint>;

inline CorpusDims model_dims(const JointModel& model) {
  if (const auto* g = std::get_if<GaussianModel>(&model)) return g->dims;
  if (const auto* m = std::get_if<GaussianMixture>(&model)) {
    if (m->components.empty()) throw data_error("GaussianMixture: no components");
    return m->components[0].dims;
  }
  return std::get<DiscreteJoint>(model).dims();
}

inline std::vector<Atom> sample_joint(const JointModel& model, std::size_t n,
                                      std::uint64_t seed) {
  if (const auto* g = std::get_if<GaussianModel>(&model)) return sample_gaussian(*g, n, seed);
  if (const auto* m = std::get_if<GaussianMixture>(&model)) return sample_mixture(*m, n, seed);
  return sample_discrete(std::get<DiscreteJoint>(model), n, seed);
}

// Three independent draws from the joint model, each marginalized to its
// advertised pair, so the labeled and unlabeled sets are genuinely
// unpaired.
inline TrainingCorpus build_corpus(const JointModel& model, std::size_t l1, std::size_t l2,
                                   std::size_t u, std::uint64_t seed) {
  if (u < 1) throw data_error("build_corpus: at least one unlabeled pair is required");
  Rng seeder(seed);
  const std::uint64_t seed1 = seeder.next_u64();
  const std::uint64_t seed2 = seeder.next_u64();
  const std::uint64_t seed3 = seeder.next_u64();

  std::vector<LabeledPair> labeled1, labeled2;
  if (l1 > 0)
    for (const Atom& a : sample_joint(model, l1, seed1)) labeled1.push_back({a.x1, a.y});
  if (l2 > 0)
    for (const Atom& a : sample_joint(model, l2, seed2)) labeled2.push_back({a.x2, a.y});
  std::vector<UnlabeledPair> unlabeled;
  for (const Atom& a : sample_joint(model, u, seed3)) unlabeled.push_back({a.x1, a.x2});
  return TrainingCorpus(std::move(labeled1), std::move(labeled2), std::move(unlabeled),
                        model_dims(model));
}

// Random small pmf for property tests: support points on a half-integer
// grid (exact in binary floating point), Dirichlet-style normalized
// positive weights. Guaranteed at least two distinct values per domain.
inline DiscreteJoint random_discrete_joint(std::uint64_t seed, int min_atoms = 3,
                                           int max_atoms = 8,
                                           CorpusDims dims = CorpusDims{1, 1, 1}) {
  if (min_atoms < 2 || max_atoms < min_atoms)
    throw data_error("random_discrete_joint: bad atom-count range");
  Rng rng(seed);
  const int natoms =
      min_atoms + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(
                                                        max_atoms - min_atoms + 1));
  auto grid_value = [&rng]() {
    return -2.0 + 0.5 * static_cast<double>(rng.next_u64() % 9);  // {-2,-1.5,...,2}
  };
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Atom> atoms;
    std::vector<double> probs;
    double total = 0.0;
    int draws = 0;
    while (static_cast<int>(atoms.size()) < natoms && draws++ < 1000) {
      Atom a;
      a.x1 = Vector(dims.m1);
      a.x2 = Vector(dims.m2);
      a.y = Vector(dims.n);
      for (int k = 0; k < dims.m1; ++k) a.x1(k) = grid_value();
      for (int k = 0; k < dims.m2; ++k) a.x2(k) = grid_value();
      for (int k = 0; k < dims.n; ++k) a.y(k) = grid_value();
      bool dup = false;
      for (const Atom& b : atoms)
        if (DiscreteJoint::same_atom(a, b)) dup = true;
      if (dup) continue;
      atoms.push_back(std::move(a));
      const double w = 0.1 + rng.uniform();
      probs.push_back(w);
      total += w;
    }
    if (static_cast<int>(atoms.size()) < natoms) continue;
    for (double& p : probs) p /= total;
    // Keep every domain non-degenerate so linear fits are meaningful.
    bool distinct1 = false, distinct2 = false;
    for (std::size_t i = 1; i < atoms.size(); ++i) {
      if (!DiscreteJoint::exact_equal(atoms[i].x1, atoms[0].x1)) distinct1 = true;
      if (!DiscreteJoint::exact_equal(atoms[i].x2, atoms[0].x2)) distinct2 = true;
    }
    if (!distinct1 || !distinct2) continue;
    // Renormalization can leave the sum a few ulps off; nudge the largest.
    double s = 0.0;
    for (double p : probs) s += p;
    probs[0] += 1.0 - s;
    if (probs[0] <= 0.0) continue;
    return DiscreteJoint(std::move(atoms), std::move(probs));
  }
  throw numeric_error("random_discrete_joint: failed to build a non-degenerate pmf");
}

}  // namespace fusereg
