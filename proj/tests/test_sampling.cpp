#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fusereg/sampling.hpp"

using namespace fusereg;
using Catch::Matchers::WithinAbs;

namespace {

GaussianModel demo_model() {
  Matrix s(3, 3);
  s << 1, 0.3, 0.5, 0.3, 1, 0.6, 0.5, 0.6, 1;
  return {s, CorpusDims{1, 1, 1}};
}

}  // namespace

TEST_CASE("the generator is deterministic in its seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform(), vb = b.uniform(), vc = c.uniform();
    all_equal = all_equal && va == vb;
    any_diff = any_diff || va != vc;
  }
  REQUIRE(all_equal);
  REQUIRE(any_diff);
}

TEST_CASE("gaussian draws reproduce the covariance") {
  const auto atoms = sample_gaussian(demo_model(), 40000, 7);
  REQUIRE(atoms.size() == 40000);

  double m1 = 0, c12 = 0, c1y = 0, v1 = 0;
  for (const auto& a : atoms) {
    m1 += a.x1(0);
    v1 += a.x1(0) * a.x1(0);
    c12 += a.x1(0) * a.x2(0);
    c1y += a.x1(0) * a.y(0);
  }
  const double n = static_cast<double>(atoms.size());
  REQUIRE_THAT(m1 / n, WithinAbs(0.0, 0.03));
  REQUIRE_THAT(v1 / n, WithinAbs(1.0, 0.05));
  REQUIRE_THAT(c12 / n, WithinAbs(0.3, 0.05));
  REQUIRE_THAT(c1y / n, WithinAbs(0.5, 0.05));
}

TEST_CASE("mixture draws average the component covariances") {
  Matrix s1(3, 3), s2(3, 3);
  s1 << 1, 0, 0.2, 0, 1, 0, 0.2, 0, 1;
  s2 << 1, 0, 0, 0, 1, 0.4, 0, 0.4, 1;
  GaussianMixture mix;
  mix.components = {{s1, CorpusDims{1, 1, 1}}, {s2, CorpusDims{1, 1, 1}}};
  mix.weights = {0.5, 0.5};

  const auto atoms = sample_mixture(mix, 40000, 11);
  double c1y = 0, c2y = 0;
  for (const auto& a : atoms) {
    c1y += a.x1(0) * a.y(0);
    c2y += a.x2(0) * a.y(0);
  }
  const double n = static_cast<double>(atoms.size());
  REQUIRE_THAT(c1y / n, WithinAbs(0.1, 0.05));
  REQUIRE_THAT(c2y / n, WithinAbs(0.2, 0.05));
}

TEST_CASE("discrete draws match the table frequencies") {
  Vector x1a(1), x2a(1), ya(1), x1b(1), x2b(1), yb(1);
  x1a << 0;
  x2a << 1;
  ya << 2;
  x1b << 1;
  x2b << -1;
  yb << 0;
  const DiscreteJoint dj({{x1a, x2a, ya}, {x1b, x2b, yb}}, {0.3, 0.7});

  const auto atoms = sample_discrete(dj, 20000, 3);
  int hits = 0;
  for (const auto& a : atoms)
    if (a.x1(0) == 0.0) ++hits;
  const double rate = hits / 20000.0;
  REQUIRE_THAT(rate, WithinAbs(0.3, 3.0 * std::sqrt(0.3 * 0.7 / 20000.0)));
}

TEST_CASE("corpus parts come from independent draws") {
  const TrainingCorpus c = build_corpus(JointModel(demo_model()), 50, 50, 50, 21);
  REQUIRE(c.labeled1().size() == 50);
  REQUIRE(c.labeled2().size() == 50);
  REQUIRE(c.unlabeled().size() == 50);

  // If the three parts shared a stream, labeled1 x's would coincide with
  // unlabeled x1's row by row.
  bool any_different = false;
  for (std::size_t i = 0; i < 50; ++i)
    any_different = any_different || c.labeled1()[i].x(0) != c.unlabeled()[i].x1(0);
  REQUIRE(any_different);

  // Same seed, same corpus; different seed, different corpus.
  const TrainingCorpus again = build_corpus(JointModel(demo_model()), 50, 50, 50, 21);
  REQUIRE(again.labeled1()[0].x(0) == c.labeled1()[0].x(0));
  const TrainingCorpus other = build_corpus(JointModel(demo_model()), 50, 50, 50, 22);
  REQUIRE(other.labeled1()[0].x(0) != c.labeled1()[0].x(0));
}

TEST_CASE("random discrete joints are valid and deterministic") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DiscreteJoint dj = random_discrete_joint(seed);
    double total = 0.0;
    for (double p : dj.probs()) total += p;
    REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
    REQUIRE(dj.atoms().size() >= 3);
  }
  const DiscreteJoint a = random_discrete_joint(9);
  const DiscreteJoint b = random_discrete_joint(9);
  REQUIRE(a.serialize() == b.serialize());
}
