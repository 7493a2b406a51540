#include <catch2/catch_amalgamated.hpp>

#include "fusereg/linalg.hpp"
#include "fusereg/numio.hpp"

using namespace fusereg;
using Catch::Matchers::WithinAbs;

TEST_CASE("pseudo_inverse matches the inverse on full-rank input") {
  Matrix a(2, 2);
  a << 4, 1, 2, 3;
  const Matrix pinv = pseudo_inverse(a);
  const Matrix id = pinv * a;
  REQUIRE_THAT(id(0, 0), WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(id(0, 1), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(id(1, 1), WithinAbs(1.0, 1e-12));
}

TEST_CASE("pseudo_inverse satisfies the Moore-Penrose identity on rank-deficient input") {
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  const Matrix pinv = pseudo_inverse(a);
  // pinv of the all-ones 2x2 matrix is 0.25 * ones
  REQUIRE_THAT(pinv(0, 0), WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(pinv(1, 1), WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(max_abs(a * pinv * a - a), WithinAbs(0.0, 1e-12));
}

TEST_CASE("pseudo_inverse of a tall matrix solves least squares") {
  Matrix x(4, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3;
  Vector y(4);
  y << 1, 3, 5, 7;
  const Vector beta = pseudo_inverse(x) * y;
  REQUIRE_THAT(beta(0), WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(beta(1), WithinAbs(2.0, 1e-10));
}

TEST_CASE("psd_sqrt squares back to the input") {
  Matrix s(2, 2);
  s << 4, 0, 0, 9;
  const Matrix r = psd_sqrt(s);
  REQUIRE_THAT(r(0, 0), WithinAbs(2.0, 1e-12));
  REQUIRE_THAT(r(1, 1), WithinAbs(3.0, 1e-12));

  Matrix t(2, 2);
  t << 2, 0.5, 0.5, 1;
  const Matrix rt = psd_sqrt(t);
  REQUIRE_THAT(max_abs(rt * rt - t), WithinAbs(0.0, 1e-12));
}

TEST_CASE("spectral_norm is the largest singular value") {
  Matrix a(2, 2);
  a << 3, 0, 0, -5;
  REQUIRE_THAT(spectral_norm(a), WithinAbs(5.0, 1e-12));
}

TEST_CASE("format_double round-trips through parse_double") {
  for (const double v : {0.1, -2.5, 1e-17, 3.141592653589793, 0.0, 12345678.9}) {
    REQUIRE(parse_double(format_double(v), "test") == v);
  }
  REQUIRE(format_double(0.1) == "0.1");
  REQUIRE(format_double(2.0) == "2");
}

TEST_CASE("parse_double rejects trailing junk") {
  REQUIRE_THROWS_AS(parse_double("1.5x", "test"), data_error);
  REQUIRE_THROWS_AS(parse_double("", "test"), data_error);
  REQUIRE_THROWS_AS(parse_double("nan or so", "test"), data_error);
}
