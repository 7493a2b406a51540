#pragma once

#include <Eigen/Dense>

#include "fusereg/errors.hpp"

namespace fusereg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
// rel_tol * sigma_max are treated as zero, so rank-deficient inputs get
// the minimum-norm solution instead of blowing up.
inline Matrix pseudo_inverse(const Matrix& m, double rel_tol = 1e-10) {
  if (!m.allFinite()) throw numeric_error("pseudo_inverse: non-finite entries in input");
  if (!(rel_tol > 0.0)) throw data_error("pseudo_inverse: rel_tol must be positive");
  if (m.size() == 0) return Matrix(m.cols(), m.rows());

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = rel_tol * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Symmetric PSD square root, clipping slightly negative eigenvalues that
// come from round-off. Used for sampling and whitening.
inline Matrix psd_sqrt(const Matrix& m, double eig_tol = 1e-10) {
  if (m.rows() != m.cols()) throw data_error("psd_sqrt: matrix must be square");
  if (!m.allFinite()) throw numeric_error("psd_sqrt: non-finite entries in input");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw numeric_error("psd_sqrt: eigendecomposition failed");
  Vector vals = eig.eigenvalues();
  const double scale = vals.size() ? std::max(1.0, vals.cwiseAbs().maxCoeff()) : 1.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < -eig_tol * scale) throw numeric_error("psd_sqrt: matrix is not positive semidefinite");
    vals(i) = vals(i) > 0.0 ? std::sqrt(vals(i)) : 0.0;
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace fusereg
