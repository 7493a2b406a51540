#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "fusereg/discrete.hpp"
#include "fusereg/sampling.hpp"

using namespace fusereg;
using Catch::Matchers::WithinAbs;

namespace {

Atom atom(double x1, double x2, double y) {
  Vector a(1), b(1), c(1);
  a << x1;
  b << x2;
  c << y;
  return {a, b, c};
}

// y = x1 + 2*x2 exactly, so the best function of (x1, x2) is y itself.
DiscreteJoint deterministic_joint() {
  return DiscreteJoint({atom(0, 0, 0), atom(0, 1, 2), atom(1, 0, 1), atom(1, 1, 3)},
                       {0.25, 0.25, 0.25, 0.25});
}

// y leaves the linear span: the fitted values below were cross-checked by
// solving the 2x2 normal equations by hand (coefficients 8/3 and 2/3).
DiscreteJoint skew_joint() {
  return DiscreteJoint({atom(0, 0, 1), atom(0, 1, 0), atom(1, 0, 2), atom(1, 1, 4)},
                       {0.25, 0.25, 0.25, 0.25});
}

DiscreteJoint noisy_joint() {
  return DiscreteJoint({atom(0, 0, -1), atom(0, 0, 1), atom(0, 1, 2), atom(1, 0, 1),
                        atom(1, 1, 3), atom(1, 1, 5)},
                       {0.125, 0.125, 0.25, 0.25, 0.125, 0.125});
}

double worst_residual(const MembershipVerdict& v) {
  return std::max({v.residual_a, v.residual_b, v.residual_marginal, v.residual_second_moment});
}

}  // namespace

TEST_CASE("discrete joint serialization round-trips and matches the golden text") {
  const DiscreteJoint dj({atom(0, -1, 0.5), atom(1, 2, -3)}, {0.25, 0.75});
  const std::string expected =
      "# discrete joint pmf: x1 x2 y probability\n"
      "dims 1 1 1\n"
      "0 -1 0.5 0.25\n"
      "1 2 -3 0.75\n";
  REQUIRE(dj.serialize() == expected);

  const DiscreteJoint back = DiscreteJoint::parse(expected);
  REQUIRE(back.atoms().size() == 2);
  REQUIRE(back.probs()[1] == 0.75);
  REQUIRE(back.atoms()[1].y(0) == -3.0);
}

TEST_CASE("discrete joint validates its input") {
  REQUIRE_THROWS_AS(DiscreteJoint({}, {}), data_error);
  REQUIRE_THROWS_AS(DiscreteJoint({atom(0, 0, 0)}, {0.5}), data_error);
  REQUIRE_THROWS_AS(DiscreteJoint({atom(0, 0, 0), atom(0, 0, 0)}, {0.5, 0.5}), data_error);
  REQUIRE_THROWS_AS(DiscreteJoint({atom(0, 0, 0), atom(1, 0, 0)}, {1.5, -0.5}), data_error);
  REQUIRE_THROWS_AS(DiscreteJoint::parse("dims 1 1 1\n"), data_error);
  REQUIRE_THROWS_AS(DiscreteJoint::parse("dims 1 1\n0 0 0 1\n"), data_error);
}

TEST_CASE("the minimax estimator reproduces y when y is a function in the joint span") {
  const DiscreteJoint dj = deterministic_joint();
  const Predictor rho =
      exact_minimax(dj, FunctionClass::nonparametric(), FunctionClass::linear());
  for (const auto& a : dj.atoms())
    REQUIRE_THAT(predict_atom(rho, a)(0), WithinAbs(a.y(0), 1e-12));
  REQUIRE_THAT(exact_mse(dj, rho), WithinAbs(0.0, 1e-12));
}

TEST_CASE("joint linear fit matches hand-solved normal equations") {
  const DiscreteJoint dj = skew_joint();
  const FunctionClass lin = FunctionClass::linear();
  const Predictor rho = exact_minimax(dj, lin, lin);
  // rho(x1, x2) = (8/3) x1 + (2/3) x2
  const double expected[] = {0.0, 2.0 / 3.0, 8.0 / 3.0, 10.0 / 3.0};
  for (std::size_t i = 0; i < dj.atoms().size(); ++i)
    REQUIRE_THAT(predict_atom(rho, dj.atoms()[i])(0), WithinAbs(expected[i], 1e-12));
  REQUIRE_THAT(exact_mse(dj, rho), WithinAbs(7.0 / 12.0, 1e-12));
}

TEST_CASE("the two construction routes for the minimax estimator agree") {
  const FunctionClass lin = FunctionClass::linear();
  const FunctionClass all = FunctionClass::nonparametric();
  const FunctionClass quad = FunctionClass::basis(parse_feature_list("x0, x0^2", 1, 1));
  const std::vector<std::pair<FunctionClass, FunctionClass>> pairs = {
      {lin, lin}, {quad, quad}, {all, lin}, {all, quad}};

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DiscreteJoint dj = random_discrete_joint(seed);
    for (const auto& [ca, cb] : pairs) {
      const Predictor via_decomposition = exact_minimax(dj, ca, cb);
      const Predictor via_expansion = exact_minimax_direct(dj, ca, cb);
      for (const auto& a : dj.atoms())
        REQUIRE_THAT(predict_atom(via_decomposition, a)(0),
                     WithinAbs(predict_atom(via_expansion, a)(0), 1e-8));
    }
  }
}

TEST_CASE("swapping the domains and the class roles together changes nothing") {
  const FunctionClass lin = FunctionClass::linear();
  const FunctionClass all = FunctionClass::nonparametric();
  for (std::uint64_t seed : {3, 9}) {
    const DiscreteJoint dj = random_discrete_joint(seed);
    const Predictor ab = exact_minimax(dj, lin, all);
    const Predictor ba = exact_minimax(dj.swapped(), all, lin);
    for (const auto& a : dj.atoms()) {
      const Atom mirrored{a.x2, a.x1, a.y};
      REQUIRE_THAT(predict_atom(ab, a)(0), WithinAbs(predict_atom(ba, mirrored)(0), 1e-8));
    }
  }
}

TEST_CASE("exact projection equals the brute-force conditional average") {
  const DiscreteJoint dj = noisy_joint();
  const Predictor rho = exact_minimax(dj, FunctionClass::linear(), FunctionClass::linear());
  const Predictor projected = exact_project(dj, rho, 1);

  // Brute force: group atoms by x1 and average rho under the conditional pmf.
  for (double x1v : {0.0, 1.0}) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < dj.atoms().size(); ++i) {
      if (dj.atoms()[i].x1(0) != x1v) continue;
      num += dj.probs()[i] * predict_atom(rho, dj.atoms()[i])(0);
      den += dj.probs()[i];
    }
    Vector q(1);
    q << x1v;
    REQUIRE_THAT(projected(q)(0), WithinAbs(num / den, 1e-12));
  }
}

TEST_CASE("reflecting the joint around the minimax estimator stays in the family") {
  const DiscreteJoint dj = noisy_joint();
  const FunctionClass lin = FunctionClass::linear();
  const Predictor rho = exact_minimax(dj, lin, lin);
  const DiscreteJoint refl = reflect(dj, rho);

  REQUIRE(refl.atoms().size() == 6);
  // y -> 2 rho - y with rho(0,1) = 7/3: 2*(7/3) - 2 = 8/3.
  REQUIRE_THAT(refl.atoms()[2].y(0), WithinAbs(8.0 / 3.0, 1e-12));

  const FeasibleFamilySpec spec = family_of(dj, lin, lin);
  const MembershipVerdict self = check_membership(dj, spec, 1e-9);
  REQUIRE(self.member);
  const MembershipVerdict mirrored = check_membership(refl, spec, 1e-9);
  REQUIRE(mirrored.member);
  REQUIRE(worst_residual(mirrored) <= 1e-9);
  REQUIRE_THAT(exact_second_moment(refl), WithinAbs(exact_second_moment(dj), 1e-12));
}

TEST_CASE("membership distinguishes harmless and harmful probability changes") {
  const DiscreteJoint dj = noisy_joint();
  const FunctionClass lin = FunctionClass::linear();
  const FeasibleFamilySpec spec = family_of(dj, lin, lin);

  // Atoms 0 and 1 share (x1, x2) = (0, 0) and |y| = 1, so moving mass
  // between them leaves all four conditions intact: the family holds
  // more joints than the one it was built from.
  std::vector<double> shuffled = dj.probs();
  shuffled[0] += 0.1;
  shuffled[1] -= 0.1;
  REQUIRE(check_membership(DiscreteJoint(dj.atoms(), shuffled), spec, 1e-9).member);

  // Moving mass across distinct (x1, x2) support points breaks it.
  std::vector<double> broken = dj.probs();
  broken[2] += 0.1;
  broken[3] -= 0.1;
  const MembershipVerdict v = check_membership(DiscreteJoint(dj.atoms(), broken), spec, 1e-9);
  REQUIRE_FALSE(v.member);
  REQUIRE_FALSE(v.failing.empty());
}

TEST_CASE("regret equals mse minus the unavoidable conditional-mean error") {
  for (std::uint64_t seed : {2, 5, 8}) {
    const DiscreteJoint dj = random_discrete_joint(seed);
    const Predictor rho = exact_minimax(dj, FunctionClass::linear(), FunctionClass::linear());
    double mmse = 0.0;
    const auto cond = exact_joint_conditional_mean(dj);
    for (std::size_t i = 0; i < dj.atoms().size(); ++i)
      mmse += dj.probs()[i] * (dj.atoms()[i].y - cond[i]).squaredNorm();
    REQUIRE_THAT(exact_regret(dj, rho), WithinAbs(exact_mse(dj, rho) - mmse, 1e-10));
  }
}

TEST_CASE("both one-domain reduction routes give the same one-domain estimator") {
  const FunctionClass all = FunctionClass::nonparametric();
  const FunctionClass lin = FunctionClass::linear();

  // Route one projects the fused estimator; route two projects the
  // domain-2 optimum and adds the projected innovation.
  for (std::uint64_t seed : {1, 4, 6}) {
    const DiscreteJoint dj = random_discrete_joint(seed);
    for (const auto& cb : {all, lin}) {
      const Predictor via_phi = exact_rho_s_via_phi(dj, all, cb);
      const Predictor via_psi = exact_rho_s_via_psi(dj, all, cb);
      for (const auto& a : dj.atoms())
        REQUIRE_THAT(via_phi(a.x1)(0), WithinAbs(via_psi(a.x1)(0), 1e-8));
    }
  }
}

TEST_CASE("projecting the domain-2 optimum differs from the conditional mean in general") {
  // x2 identifies the atom, so the best function of x2 under the linear
  // class tilts toward large |x2|; its projection onto x1 = 0 averages out.
  const DiscreteJoint dj({atom(0, -1, 1), atom(0, 1, 0), atom(1, 3, 5)},
                         {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const Predictor psi = exact_class_optimal(dj, 2, FunctionClass::linear());
  Vector q(1);
  q << 3;
  REQUIRE_THAT(psi(q)(0), WithinAbs(42.0 / 11.0, 1e-12));  // slope 14/11

  const Predictor projected = exact_project(dj, lift(psi), 1);
  q << 0;
  REQUIRE_THAT(projected(q)(0), WithinAbs(0.0, 1e-12));
  q << 1;
  REQUIRE_THAT(projected(q)(0), WithinAbs(42.0 / 11.0, 1e-12));

  // E[Y | X1 = 0] = 0.5, which the projected class optimum is not.
  const Predictor rho_s = exact_rho_s_via_phi(dj, FunctionClass::nonparametric(),
                                              FunctionClass::nonparametric());
  q << 0;
  REQUIRE_THAT(rho_s(q)(0), WithinAbs(0.5, 1e-12));
}

TEST_CASE("the projected innovation is large on the designed counterexample") {
  // x2 = x1 makes the quadratic x2^2 perfectly predictable from x1, yet
  // no linear function of x1 matches it, so the innovation survives the
  // projection.
  const DiscreteJoint dj({atom(-1, -1, 0), atom(0, 0, 0), atom(1, 1, 2)},
                         {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const FunctionClass lin = FunctionClass::linear();
  const FunctionClass quad = FunctionClass::basis(parse_feature_list("x0^2", 1, 1));

  const Predictor inn = exact_innovation(dj, lin, quad.basis_maps());
  const Predictor projected = exact_project(dj, inn, 1);
  double second = 0.0;
  for (std::size_t i = 0; i < dj.atoms().size(); ++i)
    second += dj.probs()[i] * projected(dj.atoms()[i].x1).squaredNorm();
  REQUIRE_THAT(second, WithinAbs(2.0 / 3.0, 1e-10));
}

TEST_CASE("monte-carlo membership agrees with the exact verdict") {
  const DiscreteJoint dj = noisy_joint();
  const FunctionClass lin = FunctionClass::linear();
  const FeasibleFamilySpec spec = family_of(dj, lin, lin);

  const auto samples = sample_discrete(dj, 20000, 99);
  const MembershipVerdict good = check_membership_mc(samples, spec);
  REQUIRE(good.member);

  // Shift every y: breaks both optimality conditions and the second moment.
  std::vector<Atom> shifted = samples;
  for (auto& a : shifted) a.y.array() += 2.0;
  const MembershipVerdict bad = check_membership_mc(shifted, spec);
  REQUIRE_FALSE(bad.member);
}
