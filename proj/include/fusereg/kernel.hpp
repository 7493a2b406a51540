#pragma once

#include <atomic>
#include <cmath>
#include <memory>

#include "fusereg/function_class.hpp"
#include "fusereg/linalg.hpp"

namespace fusereg {

// Gaussian-kernel local regression (locally constant or locally linear)
// with a per-query adaptive bandwidth: bandwidth_constant times the root
// mean squared distance from the query to all training inputs. When every
// kernel weight underflows to zero the regressor falls back to the
// uniform-weight mean of the targets and counts the event.
class KernelRegressor {
 public:
  KernelRegressor(Matrix inputs, Matrix targets, KernelConfig cfg = {})
      : x_(std::move(inputs)),
        y_(std::move(targets)),
        cfg_(cfg),
        fallbacks_(std::make_shared<std::atomic<long>>(0)) {
    if (x_.rows() == 0) throw data_error("KernelRegressor: no training samples");
    if (x_.rows() != y_.rows())
      throw data_error("KernelRegressor: inputs and targets disagree on sample count");
    if (!x_.allFinite() || !y_.allFinite())
      throw numeric_error("KernelRegressor: non-finite training values");
    if (cfg_.order != 0 && cfg_.order != 1)
      throw data_error("KernelRegressor: order must be 0 or 1");
    if (!(cfg_.bandwidth_constant > 0.0))
      throw data_error("KernelRegressor: bandwidth_constant must be positive");
    if (cfg_.regularization && *cfg_.regularization < 0.0)
      throw data_error("KernelRegressor: regularization must be nonnegative");
  }

  double adaptive_bandwidth(const Vector& q) const {
    return cfg_.bandwidth_constant * std::sqrt(squared_distances(q).mean());
  }

  Vector predict(const Vector& q) const {
    if (q.size() != x_.cols()) throw data_error("KernelRegressor: query dimension mismatch");
    if (!q.allFinite()) throw numeric_error("KernelRegressor: non-finite query");

    const Vector d2 = squared_distances(q);
    const double h = cfg_.bandwidth_constant * std::sqrt(d2.mean());
    if (h == 0.0) return target_mean();  // every training input equals the query

    const Vector w = (-d2 / (2.0 * h * h)).array().exp();
    const double wsum = w.sum();
    // Vectorized exp may clamp to a denormal instead of underflowing to
    // zero, so treat any denormal-range sum as an underflow too.
    if (!(wsum > 1e-300)) {
      ++*fallbacks_;
      return target_mean();
    }

    if (cfg_.order == 0) return y_.transpose() * w / wsum;

    // Locally linear: weighted least squares of y on [1, x - q].
    const Eigen::Index m = x_.cols();
    Matrix z(x_.rows(), m + 1);
    z.col(0).setOnes();
    z.rightCols(m) = x_.rowwise() - q.transpose();
    const Matrix g = z.transpose() * w.asDiagonal() * z;
    const Matrix rhs = z.transpose() * w.asDiagonal() * y_;
    const double ridge = cfg_.regularization ? *cfg_.regularization : 1e-8 * g.trace();
    Matrix beta;
    if (ridge > 0.0) {
      beta = (g + ridge * Matrix::Identity(m + 1, m + 1)).ldlt().solve(rhs);
    } else {
      beta = pseudo_inverse(g) * rhs;
    }
    return beta.row(0).transpose();
  }

  Matrix predict_batch(const Matrix& queries) const {
    Matrix out(queries.rows(), y_.cols());
    for (Eigen::Index i = 0; i < queries.rows(); ++i)
      out.row(i) = predict(queries.row(i).transpose()).transpose();
    return out;
  }

  long fallback_count() const { return fallbacks_->load(); }
  const Matrix& inputs() const { return x_; }
  const Matrix& targets() const { return y_; }
  const KernelConfig& config() const { return cfg_; }

 private:
  Vector squared_distances(const Vector& q) const {
    return (x_.rowwise() - q.transpose()).rowwise().squaredNorm();
  }

  Vector target_mean() const { return y_.colwise().mean().transpose(); }

  Matrix x_;  // n x input_dim
  Matrix y_;  // n x output_dim
  KernelConfig cfg_;
  std::shared_ptr<std::atomic<long>> fallbacks_;
};

}  // namespace fusereg
