#pragma once

#include <cctype>
#include <charconv>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/linalg.hpp"

namespace fusereg {

// Settings for the Gaussian-kernel local regressor. regularization is an
// absolute ridge added to the local normal equations; unset means an
// adaptive ridge of 1e-8 times the trace.
struct KernelConfig {
  double bandwidth_constant = 0.1;
  std::optional<double> regularization{};
  int order = 1;  // 0 = locally constant, 1 = locally linear
};

// How a basis map is written back out. scalar_expr uses the small feature
// grammar ("x0^2*x1"); out_coord is the output coordinate the scalar
// feeds. Maps built programmatically may leave this unset, which makes
// the resulting predictor non-serializable.
struct FeatureMapSerial {
  std::string scalar_expr;
  int out_coord = 0;
};

struct FeatureMap {
  std::function<Vector(const Vector&)> fn;
  int output_dim = 0;
  std::optional<FeatureMapSerial> serial{};
};

enum class ClassKind { Zero, Linear, Basis, Nonparametric };

inline std::string to_string(ClassKind k) {
  switch (k) {
    case ClassKind::Zero: return "zero";
    case ClassKind::Linear: return "linear";
    case ClassKind::Basis: return "basis";
    case ClassKind::Nonparametric: return "nonparametric";
  }
  return "?";
}

// A family of candidate regression functions on one domain. Zero is the
// single zero function, Linear is all linear maps, Basis is the span of
// finitely many maps with scalar coefficients, Nonparametric stands for
// all (square-integrable) functions and is fit with the kernel regressor.
class FunctionClass {
 public:
  static FunctionClass zero() { return FunctionClass(ClassKind::Zero); }
  static FunctionClass linear() { return FunctionClass(ClassKind::Linear); }
  static FunctionClass basis(std::vector<FeatureMap> maps) {
    if (maps.empty()) throw data_error("FunctionClass: basis requires at least one map");
    FunctionClass c(ClassKind::Basis);
    c.maps_ = std::move(maps);
    return c;
  }
  static FunctionClass nonparametric(KernelConfig cfg = {}) {
    FunctionClass c(ClassKind::Nonparametric);
    c.kernel_ = cfg;
    return c;
  }

  ClassKind kind() const { return kind_; }

  const std::vector<FeatureMap>& basis_maps() const {
    if (kind_ != ClassKind::Basis) throw data_error("FunctionClass: not a basis class");
    return maps_;
  }

  const KernelConfig& kernel_config() const { return kernel_; }

 private:
  explicit FunctionClass(ClassKind k) : kind_(k) {}
  ClassKind kind_;
  std::vector<FeatureMap> maps_;
  KernelConfig kernel_{};
};

namespace detail {

inline int parse_int_token(std::string_view s, const std::string& expr) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw data_error("feature expression '" + expr + "': bad integer '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

// Parses one scalar feature term: products of powers of input
// coordinates, e.g. "1", "x0", "x2^3", "x0*x1^2". Coordinate indices are
// validated against input_dim up front.
inline std::function<double(const Vector&)> parse_scalar_feature(const std::string& expr,
                                                                 int input_dim) {
  std::string stripped;
  for (char ch : expr)
    if (!std::isspace(static_cast<unsigned char>(ch))) stripped.push_back(ch);
  if (stripped.empty()) throw data_error("feature expression is empty");

  std::vector<std::pair<int, int>> powers;  // (coordinate, exponent)
  bool constant_one = false;
  std::size_t pos = 0;
  while (pos < stripped.size()) {
    std::size_t star = stripped.find('*', pos);
    std::string_view tok(stripped.data() + pos,
                         (star == std::string::npos ? stripped.size() : star) - pos);
    pos = star == std::string::npos ? stripped.size() : star + 1;
    if (tok.empty()) throw data_error("feature expression '" + expr + "': empty factor");
    if (tok == "1") {
      constant_one = true;
      continue;
    }
    if (tok.front() != 'x')
      throw data_error("feature expression '" + expr + "': bad factor '" + std::string(tok) + "'");
    tok.remove_prefix(1);
    int exponent = 1;
    if (std::size_t caret = tok.find('^'); caret != std::string_view::npos) {
      exponent = detail::parse_int_token(tok.substr(caret + 1), expr);
      tok = tok.substr(0, caret);
    }
    const int coord = detail::parse_int_token(tok, expr);
    if (coord < 0 || coord >= input_dim)
      throw data_error("feature expression '" + expr + "': coordinate x" +
                       std::to_string(coord) + " out of range for input dimension " +
                       std::to_string(input_dim));
    if (exponent < 0)
      throw data_error("feature expression '" + expr + "': negative exponent");
    powers.emplace_back(coord, exponent);
  }
  if (powers.empty() && !constant_one)
    throw data_error("feature expression '" + expr + "' has no factors");

  return [powers](const Vector& x) {
    double v = 1.0;
    for (const auto& [coord, exponent] : powers) {
      double p = 1.0;
      for (int e = 0; e < exponent; ++e) p *= x(coord);
      v *= p;
    }
    return v;
  };
}

// One basis map per (expression, output coordinate): the scalar feature
// times the unit vector for that coordinate.
inline FeatureMap make_coordinate_map(const std::string& expr, int input_dim, int output_dim,
                                      int out_coord) {
  if (out_coord < 0 || out_coord >= output_dim)
    throw data_error("make_coordinate_map: output coordinate out of range");
  auto scalar = parse_scalar_feature(expr, input_dim);
  FeatureMap m;
  m.output_dim = output_dim;
  m.serial = FeatureMapSerial{expr, out_coord};
  m.fn = [scalar, output_dim, out_coord](const Vector& x) {
    Vector v = Vector::Zero(output_dim);
    v(out_coord) = scalar(x);
    return v;
  };
  return m;
}

// Expands a comma-separated list of scalar feature expressions into maps,
// broadcasting each expression over every output coordinate.
inline std::vector<FeatureMap> parse_feature_list(const std::string& list, int input_dim,
                                                  int output_dim) {
  std::vector<FeatureMap> maps;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    std::string expr = list.substr(pos, (comma == std::string::npos ? list.size() : comma) - pos);
    pos = comma == std::string::npos ? list.size() + 1 : comma + 1;
    std::size_t lo = expr.find_first_not_of(" \t");
    if (lo == std::string::npos) {
      if (comma == std::string::npos && maps.empty())
        throw data_error("feature list is empty");
      continue;
    }
    expr = expr.substr(lo, expr.find_last_not_of(" \t") - lo + 1);
    for (int r = 0; r < output_dim; ++r)
      maps.push_back(make_coordinate_map(expr, input_dim, output_dim, r));
  }
  if (maps.empty()) throw data_error("feature list is empty");
  return maps;
}

// The elementary maps e_r * x_c spanning all linear functions.
inline std::vector<FeatureMap> linear_generator_maps(int input_dim, int output_dim) {
  if (input_dim < 1 || output_dim < 1)
    throw data_error("linear_generator_maps: dimensions must be positive");
  std::vector<FeatureMap> maps;
  maps.reserve(static_cast<std::size_t>(input_dim) * output_dim);
  for (int r = 0; r < output_dim; ++r)
    for (int c = 0; c < input_dim; ++c)
      maps.push_back(make_coordinate_map("x" + std::to_string(c), input_dim, output_dim, r));
  return maps;
}

// Finite generator set of a class, if it has one.
inline std::vector<FeatureMap> class_generator_maps(const FunctionClass& cls, int input_dim,
                                                    int output_dim) {
  switch (cls.kind()) {
    case ClassKind::Zero: return {};
    case ClassKind::Linear: return linear_generator_maps(input_dim, output_dim);
    case ClassKind::Basis: {
      for (std::size_t k = 0; k < cls.basis_maps().size(); ++k)
        if (cls.basis_maps()[k].output_dim != output_dim)
          throw data_error("class_generator_maps: basis map " + std::to_string(k) +
                           " has output dimension " +
                           std::to_string(cls.basis_maps()[k].output_dim) + ", expected " +
                           std::to_string(output_dim));
      return cls.basis_maps();
    }
    case ClassKind::Nonparametric:
      throw data_error("class_generator_maps: nonparametric class has no finite generator set");
  }
  throw data_error("class_generator_maps: unknown class kind");
}

}  // namespace fusereg
