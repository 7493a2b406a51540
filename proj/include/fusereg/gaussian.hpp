#pragma once

#include "fusereg/corpus.hpp"
#include "fusereg/linalg.hpp"

namespace fusereg {

// Zero-mean jointly Gaussian (X1, X2, Y) described by one covariance
// matrix, blocks ordered (X1, X2, Y).
struct GaussianModel {
  Matrix sigma;
  CorpusDims dims;
};

inline void validate_gaussian(const GaussianModel& g) {
  const Eigen::Index d = g.dims.m1 + g.dims.m2 + g.dims.n;
  if (g.dims.m1 < 1 || g.dims.m2 < 1 || g.dims.n < 1)
    throw data_error("GaussianModel: dimensions must be positive");
  if (g.sigma.rows() != d || g.sigma.cols() != d)
    throw data_error("GaussianModel: sigma must be " + std::to_string(d) + "x" +
                     std::to_string(d));
  if (!g.sigma.allFinite()) throw numeric_error("GaussianModel: non-finite sigma");
  if (max_abs(g.sigma - g.sigma.transpose()) > 1e-12 * (1.0 + max_abs(g.sigma)))
    throw data_error("GaussianModel: sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g.sigma);
  if (eig.eigenvalues().minCoeff() < -1e-10 * (1.0 + eig.eigenvalues().cwiseAbs().maxCoeff()))
    throw data_error("GaussianModel: sigma is not positive semidefinite");
}

// Closed-form conditioning report. For a zero-mean Gaussian the
// conditional means are linear, so each estimator is a coefficient
// matrix; the fused coefficients split into per-domain blocks. The
// residual-gain route computes the same joint estimator as
// E[Y|X1] + gain * (X2 - E[X2|X1]).
struct GaussianReport {
  Matrix coef_y_x1;     // E[Y|X1] = coef_y_x1 * x1
  Matrix coef_y_x2;     // E[Y|X2] = coef_y_x2 * x2
  Matrix coef_joint_x1; // E[Y|X1,X2] = coef_joint_x1 * x1 + coef_joint_x2 * x2
  Matrix coef_joint_x2;
  Matrix coef_x2_x1;    // E[X2|X1] = coef_x2_x1 * x1
  Matrix gain;          // E[Y W^T] pinv(E[W W^T]), W = X2 - E[X2|X1]
  double mse_x1 = 0;
  double mse_x2 = 0;
  double mse_joint = 0;
  double mse_residual_gain = 0;  // MSE of the residual-gain route; equals mse_joint
  double regret_x1 = 0;          // mse_x1 - mse_joint
  double regret_x2 = 0;
};

inline GaussianReport gaussian_conditionals(const GaussianModel& g) {
  validate_gaussian(g);
  const int m1 = g.dims.m1, m2 = g.dims.m2, n = g.dims.n;
  const Matrix s11 = g.sigma.block(0, 0, m1, m1);
  const Matrix s12 = g.sigma.block(0, m1, m1, m2);
  const Matrix s1y = g.sigma.block(0, m1 + m2, m1, n);
  const Matrix s22 = g.sigma.block(m1, m1, m2, m2);
  const Matrix s2y = g.sigma.block(m1, m1 + m2, m2, n);
  const Matrix syy = g.sigma.block(m1 + m2, m1 + m2, n, n);

  GaussianReport r;
  r.coef_y_x1 = s1y.transpose() * pseudo_inverse(s11);
  r.coef_y_x2 = s2y.transpose() * pseudo_inverse(s22);
  r.coef_x2_x1 = s12.transpose() * pseudo_inverse(s11);

  Matrix joint(m1 + m2, m1 + m2);
  joint << s11, s12, s12.transpose(), s22;
  Matrix cross(n, m1 + m2);
  cross << s1y.transpose(), s2y.transpose();
  const Matrix bj = cross * pseudo_inverse(joint);
  r.coef_joint_x1 = bj.leftCols(m1);
  r.coef_joint_x2 = bj.rightCols(m2);

  const Matrix gamma_ww = s22 - s12.transpose() * pseudo_inverse(s11) * s12;
  const Matrix gamma_yw = s2y.transpose() - r.coef_y_x1 * s12;
  r.gain = gamma_yw * pseudo_inverse(gamma_ww);

  r.mse_x1 = (syy - r.coef_y_x1 * s1y).trace();
  r.mse_x2 = (syy - r.coef_y_x2 * s2y).trace();
  r.mse_joint = (syy - bj * cross.transpose()).trace();
  r.mse_residual_gain = r.mse_x1 - (r.gain * gamma_yw.transpose()).trace();
  r.regret_x1 = r.mse_x1 - r.mse_joint;
  r.regret_x2 = r.mse_x2 - r.mse_joint;
  return r;
}

}  // namespace fusereg
