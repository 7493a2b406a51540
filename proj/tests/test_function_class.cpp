#include <catch2/catch_amalgamated.hpp>

#include "fusereg/function_class.hpp"

using namespace fusereg;

TEST_CASE("scalar feature grammar covers constants, coordinates, powers and products") {
  Vector x(3);
  x << 2, 3, -1;

  REQUIRE(parse_scalar_feature("1", 3)(x) == 1.0);
  REQUIRE(parse_scalar_feature("x0", 3)(x) == 2.0);
  REQUIRE(parse_scalar_feature("x2", 3)(x) == -1.0);
  REQUIRE(parse_scalar_feature("x1^2", 3)(x) == 9.0);
  REQUIRE(parse_scalar_feature("x0*x1", 3)(x) == 6.0);
  REQUIRE(parse_scalar_feature("x0^2*x2^3", 3)(x) == -4.0);
  REQUIRE(parse_scalar_feature(" x0 * x1 ", 3)(x) == 6.0);
  REQUIRE(parse_scalar_feature("x0^0", 3)(x) == 1.0);
}

TEST_CASE("scalar feature grammar rejects malformed terms") {
  REQUIRE_THROWS_AS(parse_scalar_feature("x3", 3), data_error);
  REQUIRE_THROWS_AS(parse_scalar_feature("x", 3), data_error);
  REQUIRE_THROWS_AS(parse_scalar_feature("x0^", 3), data_error);
  REQUIRE_THROWS_AS(parse_scalar_feature("2*x0", 3), data_error);
  REQUIRE_THROWS_AS(parse_scalar_feature("", 3), data_error);
  REQUIRE_THROWS_AS(parse_scalar_feature("x0+x1", 3), data_error);
  REQUIRE_THROWS_AS(parse_scalar_feature("x0**x1", 3), data_error);
}

TEST_CASE("feature lists split on commas and keep order") {
  const auto maps = parse_feature_list("x0, x0^2, 1", 1, 1);
  REQUIRE(maps.size() == 3);
  Vector x(1);
  x << 4;
  REQUIRE(maps[0].fn(x)(0) == 4.0);
  REQUIRE(maps[1].fn(x)(0) == 16.0);
  REQUIRE(maps[2].fn(x)(0) == 1.0);
  REQUIRE(maps[1].serial.has_value());
  REQUIRE(maps[1].serial->scalar_expr == "x0^2");
}

TEST_CASE("feature lists broadcast over output coordinates") {
  const auto maps = parse_feature_list("x0", 1, 2);
  REQUIRE(maps.size() == 2);
  Vector x(1);
  x << 3;
  REQUIRE(maps[0].fn(x)(0) == 3.0);
  REQUIRE(maps[0].fn(x)(1) == 0.0);
  REQUIRE(maps[1].fn(x)(0) == 0.0);
  REQUIRE(maps[1].fn(x)(1) == 3.0);
}

TEST_CASE("linear generator maps enumerate unit-output coordinate functions") {
  // For input dim 2 and output dim 2 the generators are e_r * x_c in
  // row-major (r, c) order.
  const auto maps = linear_generator_maps(2, 2);
  REQUIRE(maps.size() == 4);
  Vector x(2);
  x << 5, 7;
  REQUIRE(maps[0].fn(x)(0) == 5.0);
  REQUIRE(maps[0].fn(x)(1) == 0.0);
  REQUIRE(maps[1].fn(x)(0) == 7.0);
  REQUIRE(maps[2].fn(x)(1) == 5.0);
  REQUIRE(maps[3].fn(x)(1) == 7.0);
}

TEST_CASE("function class factories expose their kind and generators") {
  const FunctionClass lin = FunctionClass::linear();
  REQUIRE(lin.kind() == ClassKind::Linear);

  const FunctionClass zero = FunctionClass::zero();
  REQUIRE(zero.kind() == ClassKind::Zero);

  const FunctionClass quad = FunctionClass::basis(parse_feature_list("x0, x0^2", 1, 1));
  REQUIRE(quad.kind() == ClassKind::Basis);
  REQUIRE(quad.basis_maps().size() == 2);
  REQUIRE_THROWS_AS(lin.basis_maps(), data_error);

  KernelConfig kc;
  kc.bandwidth_constant = 0.3;
  const FunctionClass np = FunctionClass::nonparametric(kc);
  REQUIRE(np.kind() == ClassKind::Nonparametric);
  REQUIRE(np.kernel_config().bandwidth_constant == 0.3);
  REQUIRE_THROWS_AS(class_generator_maps(np, 1, 1), data_error);
  REQUIRE(class_generator_maps(zero, 1, 1).empty());
}
