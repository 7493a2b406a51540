#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fusereg/corpus.hpp"
#include "fusereg/function_class.hpp"
#include "fusereg/kernel.hpp"
#include "fusereg/linalg.hpp"

namespace fusereg {

enum class Arity { OneDomain, TwoDomain };

inline nlohmann::json json_from_vector(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json json_from_matrix(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(json_from_vector(m.row(i)));
  return rows;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw data_error("predictor file: expected an array of numbers");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw data_error("predictor file: expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw data_error("predictor file: expected an array of rows");
  if (j.empty()) return Matrix(0, 0);
  Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    Vector row = vector_from_json(j[i]);
    if (row.size() != m.cols()) throw data_error("predictor file: ragged matrix rows");
    m.row(static_cast<Eigen::Index>(i)) = row;
  }
  return m;
}

// A node in a predictor expression tree. One-domain nodes consume a
// single input vector (which() says which domain it is read from);
// two-domain nodes consume (x1, x2).
class PredictorNode {
 public:
  virtual ~PredictorNode() = default;
  virtual Arity arity() const = 0;
  virtual int which() const { return 1; }
  virtual int output_dim() const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json structure() const = 0;

  virtual Vector eval1(const Vector&) const {
    throw data_error("predictor '" + kind() + "' consumes two domains; one input given");
  }
  virtual Vector eval2(const Vector&, const Vector&) const {
    throw data_error("predictor '" + kind() + "' consumes one domain; two inputs given");
  }
  virtual void collect_kernels(std::vector<const KernelRegressor*>& out) const { (void)out; }
};

// Value wrapper around a shared immutable node tree, with fit-time
// diagnostics and free-form notes carried alongside.
class Predictor {
 public:
  Predictor() = default;

  explicit Predictor(std::shared_ptr<const PredictorNode> node,
                     std::map<std::string, double> diagnostics = {},
                     std::vector<std::string> notes = {})
      : node_(std::move(node)), diagnostics_(std::move(diagnostics)), notes_(std::move(notes)) {
    if (!node_) throw data_error("Predictor: null node");
  }

  bool valid() const { return node_ != nullptr; }
  Arity arity() const { return checked().arity(); }
  int which() const { return checked().which(); }
  int output_dim() const { return checked().output_dim(); }
  const std::shared_ptr<const PredictorNode>& node() const { return node_; }

  Vector operator()(const Vector& x) const { return checked().eval1(x); }
  Vector operator()(const Vector& x1, const Vector& x2) const { return checked().eval2(x1, x2); }

  const std::map<std::string, double>& diagnostics() const { return diagnostics_; }
  const std::vector<std::string>& notes() const { return notes_; }

  Predictor with_diagnostic(const std::string& name, double value) const {
    Predictor p = *this;
    p.diagnostics_[name] = value;
    return p;
  }
  Predictor with_note(const std::string& note) const {
    Predictor p = *this;
    p.notes_.push_back(note);
    return p;
  }

  long kernel_fallbacks() const {
    std::vector<const KernelRegressor*> kernels;
    checked().collect_kernels(kernels);
    long total = 0;
    for (const auto* k : kernels) total += k->fallback_count();
    return total;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "fusereg-predictor-v1";
    j["arity"] = arity() == Arity::OneDomain ? "one" : "two";
    j["which"] = which();
    j["output_dim"] = output_dim();
    j["node"] = checked().structure();
    j["diagnostics"] = diagnostics_;
    j["notes"] = notes_;
    return j;
  }

  static Predictor from_json(const nlohmann::json& j);

 private:
  const PredictorNode& checked() const {
    if (!node_) throw data_error("Predictor: empty");
    return *node_;
  }

  std::shared_ptr<const PredictorNode> node_;
  std::map<std::string, double> diagnostics_;
  std::vector<std::string> notes_;
};

namespace detail {

inline void require_dim(const Vector& x, int dim, const std::string& kind) {
  if (x.size() != dim)
    throw data_error("predictor '" + kind + "': input dimension " + std::to_string(x.size()) +
                     ", expected " + std::to_string(dim));
}

inline nlohmann::json feature_maps_to_json(const std::vector<FeatureMap>& maps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : maps) {
    if (!m.serial)
      throw data_error("predictor contains a basis map without a textual form; cannot serialize");
    arr.push_back({{"feature", m.serial->scalar_expr}, {"out_coord", m.serial->out_coord}});
  }
  return arr;
}

inline std::vector<FeatureMap> feature_maps_from_json(const nlohmann::json& arr, int input_dim,
                                                      int output_dim) {
  std::vector<FeatureMap> maps;
  for (const auto& item : arr)
    maps.push_back(make_coordinate_map(item.at("feature").get<std::string>(), input_dim,
                                       output_dim, item.at("out_coord").get<int>()));
  return maps;
}

}  // namespace detail

class ZeroNode : public PredictorNode {
 public:
  ZeroNode(int output_dim, Arity arity, int which = 1)
      : dim_(output_dim), arity_(arity), which_(which) {
    if (dim_ < 1) throw data_error("ZeroNode: output dimension must be positive");
  }
  Arity arity() const override { return arity_; }
  int which() const override { return which_; }
  int output_dim() const override { return dim_; }
  std::string kind() const override { return "zero"; }
  Vector eval1(const Vector&) const override {
    if (arity_ != Arity::OneDomain) return PredictorNode::eval1(Vector());
    return Vector::Zero(dim_);
  }
  Vector eval2(const Vector&, const Vector&) const override {
    if (arity_ != Arity::TwoDomain) return PredictorNode::eval2(Vector(), Vector());
    return Vector::Zero(dim_);
  }
  nlohmann::json structure() const override {
    return {{"kind", "zero"},
            {"arity", arity_ == Arity::OneDomain ? "one" : "two"},
            {"which", which_},
            {"output_dim", dim_}};
  }

 private:
  int dim_;
  Arity arity_;
  int which_;
};

class LinearNode : public PredictorNode {
 public:
  explicit LinearNode(Matrix coef, int which = 1) : b_(std::move(coef)), which_(which) {
    if (b_.size() == 0) throw data_error("LinearNode: empty coefficient matrix");
    if (!b_.allFinite()) throw numeric_error("LinearNode: non-finite coefficients");
  }
  Arity arity() const override { return Arity::OneDomain; }
  int which() const override { return which_; }
  int output_dim() const override { return static_cast<int>(b_.rows()); }
  std::string kind() const override { return "linear"; }
  Vector eval1(const Vector& x) const override {
    detail::require_dim(x, static_cast<int>(b_.cols()), kind());
    return b_ * x;
  }
  nlohmann::json structure() const override {
    return {{"kind", "linear"}, {"which", which_}, {"matrix", json_from_matrix(b_)}};
  }
  const Matrix& coefficients() const { return b_; }

 private:
  Matrix b_;
  int which_;
};

class LinearTwoNode : public PredictorNode {
 public:
  LinearTwoNode(Matrix b1, Matrix b2) : b1_(std::move(b1)), b2_(std::move(b2)) {
    if (b1_.rows() != b2_.rows()) throw data_error("LinearTwoNode: output dimensions disagree");
    if (!b1_.allFinite() || !b2_.allFinite())
      throw numeric_error("LinearTwoNode: non-finite coefficients");
  }
  Arity arity() const override { return Arity::TwoDomain; }
  int output_dim() const override { return static_cast<int>(b1_.rows()); }
  std::string kind() const override { return "linear2"; }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    detail::require_dim(x1, static_cast<int>(b1_.cols()), kind());
    detail::require_dim(x2, static_cast<int>(b2_.cols()), kind());
    return b1_ * x1 + b2_ * x2;
  }
  nlohmann::json structure() const override {
    return {{"kind", "linear2"},
            {"matrix1", json_from_matrix(b1_)},
            {"matrix2", json_from_matrix(b2_)}};
  }
  const Matrix& coefficients1() const { return b1_; }
  const Matrix& coefficients2() const { return b2_; }

 private:
  Matrix b1_, b2_;
};

class BasisNode : public PredictorNode {
 public:
  BasisNode(std::vector<FeatureMap> maps, Vector coeffs, int input_dim, int which = 1)
      : maps_(std::move(maps)), a_(std::move(coeffs)), input_dim_(input_dim), which_(which) {
    if (maps_.empty()) throw data_error("BasisNode: no basis maps");
    if (a_.size() != static_cast<Eigen::Index>(maps_.size()))
      throw data_error("BasisNode: coefficient count does not match map count");
    if (!a_.allFinite()) throw numeric_error("BasisNode: non-finite coefficients");
    for (std::size_t k = 1; k < maps_.size(); ++k)
      if (maps_[k].output_dim != maps_[0].output_dim)
        throw data_error("BasisNode: basis maps disagree on output dimension");
  }
  Arity arity() const override { return Arity::OneDomain; }
  int which() const override { return which_; }
  int output_dim() const override { return maps_[0].output_dim; }
  std::string kind() const override { return "basis"; }
  Vector eval1(const Vector& x) const override {
    detail::require_dim(x, input_dim_, kind());
    Vector out = Vector::Zero(output_dim());
    for (std::size_t k = 0; k < maps_.size(); ++k)
      out += a_(static_cast<Eigen::Index>(k)) * maps_[k].fn(x);
    return out;
  }
  nlohmann::json structure() const override {
    return {{"kind", "basis"},          {"which", which_},
            {"input_dim", input_dim_},  {"output_dim", output_dim()},
            {"coefficients", json_from_vector(a_)}, {"maps", detail::feature_maps_to_json(maps_)}};
  }
  const Vector& coefficients() const { return a_; }
  const std::vector<FeatureMap>& maps() const { return maps_; }

 private:
  std::vector<FeatureMap> maps_;
  Vector a_;
  int input_dim_;
  int which_;
};

class KernelNode : public PredictorNode {
 public:
  explicit KernelNode(std::shared_ptr<const KernelRegressor> reg, int which = 1)
      : reg_(std::move(reg)), which_(which) {
    if (!reg_) throw data_error("KernelNode: null regressor");
  }
  Arity arity() const override { return Arity::OneDomain; }
  int which() const override { return which_; }
  int output_dim() const override { return static_cast<int>(reg_->targets().cols()); }
  std::string kind() const override { return "kernel"; }
  Vector eval1(const Vector& x) const override { return reg_->predict(x); }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    out.push_back(reg_.get());
  }
  nlohmann::json structure() const override {
    const KernelConfig& cfg = reg_->config();
    nlohmann::json j{{"kind", "kernel"},
                     {"which", which_},
                     {"inputs", json_from_matrix(reg_->inputs())},
                     {"targets", json_from_matrix(reg_->targets())},
                     {"bandwidth_constant", cfg.bandwidth_constant},
                     {"order", cfg.order}};
    j["regularization"] = cfg.regularization ? nlohmann::json(*cfg.regularization)
                                             : nlohmann::json("adaptive");
    return j;
  }
  const KernelRegressor& regressor() const { return *reg_; }

 private:
  std::shared_ptr<const KernelRegressor> reg_;
  int which_;
};

// Piecewise lookup on a finite support: exact-match queries only. Backs
// the closed-form fits on discrete tables.
class TableNode : public PredictorNode {
 public:
  TableNode(Matrix keys, Matrix values, int which = 1)
      : keys_(std::move(keys)), values_(std::move(values)), which_(which) {
    if (keys_.rows() == 0) throw data_error("TableNode: empty table");
    if (keys_.rows() != values_.rows())
      throw data_error("TableNode: key and value row counts disagree");
  }
  Arity arity() const override { return Arity::OneDomain; }
  int which() const override { return which_; }
  int output_dim() const override { return static_cast<int>(values_.cols()); }
  std::string kind() const override { return "table"; }
  Vector eval1(const Vector& x) const override {
    detail::require_dim(x, static_cast<int>(keys_.cols()), kind());
    for (Eigen::Index i = 0; i < keys_.rows(); ++i)
      if ((keys_.row(i).transpose().array() == x.array()).all()) return values_.row(i);
    throw data_error("predictor 'table': query is not a support point");
  }
  nlohmann::json structure() const override {
    return {{"kind", "table"},
            {"which", which_},
            {"keys", json_from_matrix(keys_)},
            {"values", json_from_matrix(values_)}};
  }
  const Matrix& keys() const { return keys_; }
  const Matrix& values() const { return values_; }

 private:
  Matrix keys_, values_;
  int which_;
};

// Presents a one-domain predictor as a two-domain one that ignores the
// other input.
class LiftNode : public PredictorNode {
 public:
  explicit LiftNode(Predictor inner) : inner_(std::move(inner)) {
    if (inner_.arity() != Arity::OneDomain) throw data_error("LiftNode: inner must be one-domain");
  }
  Arity arity() const override { return Arity::TwoDomain; }
  int output_dim() const override { return inner_.output_dim(); }
  std::string kind() const override { return "lift"; }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    return inner_(inner_.which() == 1 ? x1 : x2);
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    inner_.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    return {{"kind", "lift"}, {"inner", inner_.to_json()}};
  }
  const Predictor& inner() const { return inner_; }

 private:
  Predictor inner_;
};

class SwapNode : public PredictorNode {
 public:
  explicit SwapNode(Predictor inner) : inner_(std::move(inner)) {
    if (inner_.arity() != Arity::TwoDomain) throw data_error("SwapNode: inner must be two-domain");
  }
  Arity arity() const override { return Arity::TwoDomain; }
  int output_dim() const override { return inner_.output_dim(); }
  std::string kind() const override { return "swap"; }
  Vector eval2(const Vector& x1, const Vector& x2) const override { return inner_(x2, x1); }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    inner_.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    return {{"kind", "swap"}, {"inner", inner_.to_json()}};
  }
  const Predictor& inner() const { return inner_; }

 private:
  Predictor inner_;
};

// Sum of predictors. A two-domain sum may mix one-domain terms from
// either domain with two-domain terms; a one-domain sum requires every
// term to read the same domain.
class SumNode : public PredictorNode {
 public:
  SumNode(std::vector<Predictor> terms, Arity arity) : terms_(std::move(terms)), arity_(arity) {
    if (terms_.empty()) throw data_error("SumNode: no terms");
    for (const auto& t : terms_) {
      if (t.output_dim() != terms_[0].output_dim())
        throw data_error("SumNode: terms disagree on output dimension");
      if (arity_ == Arity::OneDomain &&
          (t.arity() != Arity::OneDomain || t.which() != terms_[0].which()))
        throw data_error("SumNode: one-domain sum requires terms on the same domain");
    }
  }
  Arity arity() const override { return arity_; }
  int which() const override { return terms_[0].which(); }
  int output_dim() const override { return terms_[0].output_dim(); }
  std::string kind() const override { return "sum"; }
  Vector eval1(const Vector& x) const override {
    if (arity_ != Arity::OneDomain) return PredictorNode::eval1(x);
    Vector out = Vector::Zero(output_dim());
    for (const auto& t : terms_) out += t(x);
    return out;
  }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    if (arity_ != Arity::TwoDomain) return PredictorNode::eval2(x1, x2);
    Vector out = Vector::Zero(output_dim());
    for (const auto& t : terms_) {
      if (t.arity() == Arity::TwoDomain)
        out += t(x1, x2);
      else
        out += t(t.which() == 1 ? x1 : x2);
    }
    return out;
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    for (const auto& t : terms_) t.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : terms_) arr.push_back(t.to_json());
    return {{"kind", "sum"},
            {"arity", arity_ == Arity::OneDomain ? "one" : "two"},
            {"terms", arr}};
  }
  const std::vector<Predictor>& terms() const { return terms_; }

 private:
  std::vector<Predictor> terms_;
  Arity arity_;
};

// Weighted sum of basis maps of x2 minus their regressions on x1:
// sum_k a_k (psi_k(x2) - eta_k(x1)). The building block of the
// semiparametric fused estimator.
class InnovationNode : public PredictorNode {
 public:
  InnovationNode(std::vector<FeatureMap> maps, int maps_input_dim,
                 std::vector<Predictor> components, Vector coeffs)
      : maps_(std::move(maps)),
        maps_input_dim_(maps_input_dim),
        etas_(std::move(components)),
        a_(std::move(coeffs)) {
    if (maps_.empty()) throw data_error("InnovationNode: no basis maps");
    if (maps_.size() != etas_.size() || a_.size() != static_cast<Eigen::Index>(maps_.size()))
      throw data_error("InnovationNode: maps, components and coefficients disagree on count");
    for (std::size_t k = 0; k < maps_.size(); ++k) {
      if (etas_[k].arity() != Arity::OneDomain)
        throw data_error("InnovationNode: component regressors must be one-domain");
      if (etas_[k].output_dim() != maps_[0].output_dim ||
          maps_[k].output_dim != maps_[0].output_dim)
        throw data_error("InnovationNode: output dimensions disagree");
    }
    if (!a_.allFinite()) throw numeric_error("InnovationNode: non-finite coefficients");
  }
  Arity arity() const override { return Arity::TwoDomain; }
  int output_dim() const override { return maps_[0].output_dim; }
  std::string kind() const override { return "innovation"; }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    detail::require_dim(x2, maps_input_dim_, kind());
    Vector out = Vector::Zero(output_dim());
    for (std::size_t k = 0; k < maps_.size(); ++k)
      out += a_(static_cast<Eigen::Index>(k)) * (maps_[k].fn(x2) - etas_[k](x1));
    return out;
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    for (const auto& e : etas_) e.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& e : etas_) comps.push_back(e.to_json());
    return {{"kind", "innovation"},
            {"maps_input_dim", maps_input_dim_},
            {"output_dim", output_dim()},
            {"coefficients", json_from_vector(a_)},
            {"maps", detail::feature_maps_to_json(maps_)},
            {"components", comps}};
  }
  const Vector& coefficients() const { return a_; }
  const std::vector<Predictor>& components() const { return etas_; }
  const std::vector<FeatureMap>& maps() const { return maps_; }

 private:
  std::vector<FeatureMap> maps_;
  int maps_input_dim_;
  std::vector<Predictor> etas_;
  Vector a_;
};

// gain * (x2 - estimate(x1)): the correction term of the partially
// linear fused estimator.
class ResidualGainNode : public PredictorNode {
 public:
  ResidualGainNode(Predictor estimate, Matrix gain)
      : xi_(std::move(estimate)), gain_(std::move(gain)) {
    if (xi_.arity() != Arity::OneDomain)
      throw data_error("ResidualGainNode: estimate must be one-domain");
    if (gain_.cols() != xi_.output_dim())
      throw data_error("ResidualGainNode: gain columns must match estimate output dimension");
    if (!gain_.allFinite()) throw numeric_error("ResidualGainNode: non-finite gain");
  }
  Arity arity() const override { return Arity::TwoDomain; }
  int output_dim() const override { return static_cast<int>(gain_.rows()); }
  std::string kind() const override { return "residual_gain"; }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    detail::require_dim(x2, static_cast<int>(gain_.cols()), kind());
    return gain_ * (x2 - xi_(x1));
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    xi_.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    return {{"kind", "residual_gain"}, {"gain", json_from_matrix(gain_)},
            {"estimate", xi_.to_json()}};
  }
  const Matrix& gain() const { return gain_; }
  const Predictor& estimate() const { return xi_; }

 private:
  Predictor xi_;
  Matrix gain_;
};

// gain * (x - estimate(x)) on a single domain; the correction term of
// the side-information estimator.
class SelfResidualGainNode : public PredictorNode {
 public:
  SelfResidualGainNode(Predictor estimate, Matrix gain, int which = 1)
      : c_(std::move(estimate)), gain_(std::move(gain)), which_(which) {
    if (c_.arity() != Arity::OneDomain)
      throw data_error("SelfResidualGainNode: estimate must be one-domain");
    if (gain_.cols() != c_.output_dim())
      throw data_error("SelfResidualGainNode: gain columns must match estimate output dimension");
    if (!gain_.allFinite()) throw numeric_error("SelfResidualGainNode: non-finite gain");
  }
  Arity arity() const override { return Arity::OneDomain; }
  int which() const override { return which_; }
  int output_dim() const override { return static_cast<int>(gain_.rows()); }
  std::string kind() const override { return "self_residual_gain"; }
  Vector eval1(const Vector& x) const override {
    detail::require_dim(x, static_cast<int>(gain_.cols()), kind());
    return gain_ * (x - c_(x));
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    c_.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    return {{"kind", "self_residual_gain"},
            {"which", which_},
            {"gain", json_from_matrix(gain_)},
            {"estimate", c_.to_json()}};
  }
  const Matrix& gain() const { return gain_; }
  const Predictor& estimate() const { return c_; }

 private:
  Predictor c_;
  Matrix gain_;
  int which_;
};

// Applies an affine change of inputs, x -> a (x - b), per domain before
// the inner predictor. Used for centering and principal-component
// reductions. An empty matrix means identity for that domain.
class InputMapNode : public PredictorNode {
 public:
  InputMapNode(Predictor inner, Matrix a1, Vector b1, Matrix a2, Vector b2)
      : inner_(std::move(inner)),
        a1_(std::move(a1)),
        b1_(std::move(b1)),
        a2_(std::move(a2)),
        b2_(std::move(b2)) {}
  Arity arity() const override { return inner_.arity(); }
  int which() const override { return inner_.which(); }
  int output_dim() const override { return inner_.output_dim(); }
  std::string kind() const override { return "input_map"; }
  Vector eval1(const Vector& x) const override {
    return inner_(apply(inner_.which() == 1 ? a1_ : a2_, inner_.which() == 1 ? b1_ : b2_, x));
  }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    return inner_(apply(a1_, b1_, x1), apply(a2_, b2_, x2));
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    inner_.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    nlohmann::json j{{"kind", "input_map"}, {"inner", inner_.to_json()}};
    j["map1"] = a1_.size() ? nlohmann::json{{"a", json_from_matrix(a1_)}, {"b", json_from_vector(b1_)}}
                           : nlohmann::json();
    j["map2"] = a2_.size() ? nlohmann::json{{"a", json_from_matrix(a2_)}, {"b", json_from_vector(b2_)}}
                           : nlohmann::json();
    return j;
  }
  const Predictor& inner() const { return inner_; }

 private:
  static Vector apply(const Matrix& a, const Vector& b, const Vector& x) {
    if (a.size() == 0) return x;
    detail::require_dim(x, static_cast<int>(a.cols()), "input_map");
    return a * (x - b);
  }
  Predictor inner_;
  Matrix a1_;
  Vector b1_;
  Matrix a2_;
  Vector b2_;
};

// Adds a constant to the inner predictor's output; undoes target
// centering.
class OutputShiftNode : public PredictorNode {
 public:
  OutputShiftNode(Predictor inner, Vector shift)
      : inner_(std::move(inner)), shift_(std::move(shift)) {
    if (shift_.size() != inner_.output_dim())
      throw data_error("OutputShiftNode: shift dimension must match inner output dimension");
  }
  Arity arity() const override { return inner_.arity(); }
  int which() const override { return inner_.which(); }
  int output_dim() const override { return inner_.output_dim(); }
  std::string kind() const override { return "output_shift"; }
  Vector eval1(const Vector& x) const override { return inner_(x) + shift_; }
  Vector eval2(const Vector& x1, const Vector& x2) const override {
    return inner_(x1, x2) + shift_;
  }
  void collect_kernels(std::vector<const KernelRegressor*>& out) const override {
    inner_.node()->collect_kernels(out);
  }
  nlohmann::json structure() const override {
    return {{"kind", "output_shift"}, {"inner", inner_.to_json()},
            {"shift", json_from_vector(shift_)}};
  }
  const Predictor& inner() const { return inner_; }

 private:
  Predictor inner_;
  Vector shift_;
};

namespace detail {

inline std::shared_ptr<const PredictorNode> node_from_json(const nlohmann::json& j);

inline Arity arity_from_json(const nlohmann::json& j) {
  const std::string s = j.get<std::string>();
  if (s == "one") return Arity::OneDomain;
  if (s == "two") return Arity::TwoDomain;
  throw data_error("predictor file: bad arity '" + s + "'");
}

}  // namespace detail

inline Predictor Predictor::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "fusereg-predictor-v1")
    throw data_error("predictor file: missing or unknown format tag");
  auto node = detail::node_from_json(j.at("node"));
  std::map<std::string, double> diags;
  if (j.contains("diagnostics"))
    for (const auto& [k, v] : j.at("diagnostics").items()) diags[k] = v.get<double>();
  std::vector<std::string> notes;
  if (j.contains("notes"))
    for (const auto& n : j.at("notes")) notes.push_back(n.get<std::string>());
  Predictor p(node, std::move(diags), std::move(notes));
  if (p.output_dim() != j.at("output_dim").get<int>())
    throw data_error("predictor file: declared output_dim disagrees with node");
  return p;
}

namespace detail {

inline std::shared_ptr<const PredictorNode> node_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero")
    return std::make_shared<ZeroNode>(j.at("output_dim").get<int>(),
                                      arity_from_json(j.at("arity")), j.at("which").get<int>());
  if (kind == "linear")
    return std::make_shared<LinearNode>(matrix_from_json(j.at("matrix")),
                                        j.at("which").get<int>());
  if (kind == "linear2")
    return std::make_shared<LinearTwoNode>(matrix_from_json(j.at("matrix1")),
                                           matrix_from_json(j.at("matrix2")));
  if (kind == "basis") {
    const int input_dim = j.at("input_dim").get<int>();
    const int output_dim = j.at("output_dim").get<int>();
    return std::make_shared<BasisNode>(feature_maps_from_json(j.at("maps"), input_dim, output_dim),
                                       vector_from_json(j.at("coefficients")), input_dim,
                                       j.at("which").get<int>());
  }
  if (kind == "kernel") {
    KernelConfig cfg;
    cfg.bandwidth_constant = j.at("bandwidth_constant").get<double>();
    cfg.order = j.at("order").get<int>();
    if (j.at("regularization").is_number())
      cfg.regularization = j.at("regularization").get<double>();
    auto reg = std::make_shared<KernelRegressor>(matrix_from_json(j.at("inputs")),
                                                 matrix_from_json(j.at("targets")), cfg);
    return std::make_shared<KernelNode>(std::move(reg), j.at("which").get<int>());
  }
  if (kind == "table")
    return std::make_shared<TableNode>(matrix_from_json(j.at("keys")),
                                       matrix_from_json(j.at("values")), j.at("which").get<int>());
  if (kind == "lift") return std::make_shared<LiftNode>(Predictor::from_json(j.at("inner")));
  if (kind == "swap") return std::make_shared<SwapNode>(Predictor::from_json(j.at("inner")));
  if (kind == "sum") {
    std::vector<Predictor> terms;
    for (const auto& t : j.at("terms")) terms.push_back(Predictor::from_json(t));
    return std::make_shared<SumNode>(std::move(terms), arity_from_json(j.at("arity")));
  }
  if (kind == "innovation") {
    const int maps_input_dim = j.at("maps_input_dim").get<int>();
    const int output_dim = j.at("output_dim").get<int>();
    std::vector<Predictor> comps;
    for (const auto& c : j.at("components")) comps.push_back(Predictor::from_json(c));
    return std::make_shared<InnovationNode>(
        feature_maps_from_json(j.at("maps"), maps_input_dim, output_dim), maps_input_dim,
        std::move(comps), vector_from_json(j.at("coefficients")));
  }
  if (kind == "residual_gain")
    return std::make_shared<ResidualGainNode>(Predictor::from_json(j.at("estimate")),
                                              matrix_from_json(j.at("gain")));
  if (kind == "self_residual_gain")
    return std::make_shared<SelfResidualGainNode>(Predictor::from_json(j.at("estimate")),
                                                  matrix_from_json(j.at("gain")),
                                                  j.at("which").get<int>());
  if (kind == "input_map") {
    Matrix a1, a2;
    Vector b1, b2;
    if (!j.at("map1").is_null()) {
      a1 = matrix_from_json(j.at("map1").at("a"));
      b1 = vector_from_json(j.at("map1").at("b"));
    }
    if (!j.at("map2").is_null()) {
      a2 = matrix_from_json(j.at("map2").at("a"));
      b2 = vector_from_json(j.at("map2").at("b"));
    }
    return std::make_shared<InputMapNode>(Predictor::from_json(j.at("inner")), std::move(a1),
                                          std::move(b1), std::move(a2), std::move(b2));
  }
  if (kind == "output_shift")
    return std::make_shared<OutputShiftNode>(Predictor::from_json(j.at("inner")),
                                             vector_from_json(j.at("shift")));
  throw data_error("predictor file: unknown node kind '" + kind + "'");
}

}  // namespace detail

// Convenience builders.
inline Predictor make_zero_predictor(int output_dim, Arity arity, int which = 1) {
  return Predictor(std::make_shared<ZeroNode>(output_dim, arity, which));
}
inline Predictor make_linear_predictor(Matrix coef, int which = 1) {
  return Predictor(std::make_shared<LinearNode>(std::move(coef), which));
}
inline Predictor lift(Predictor inner) {
  return Predictor(std::make_shared<LiftNode>(std::move(inner)));
}
inline Predictor swap_domains(Predictor inner) {
  return Predictor(std::make_shared<SwapNode>(std::move(inner)));
}
inline Predictor sum_predictors(std::vector<Predictor> terms, Arity arity) {
  return Predictor(std::make_shared<SumNode>(std::move(terms), arity));
}

// Evaluates a predictor of either arity on a joint draw.
inline Vector predict_atom(const Predictor& p, const Atom& atom) {
  if (p.arity() == Arity::TwoDomain) return p(atom.x1, atom.x2);
  return p(p.which() == 1 ? atom.x1 : atom.x2);
}

}  // namespace fusereg
