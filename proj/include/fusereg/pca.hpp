#pragma once

#include <string>

#include <Eigen/Eigenvalues>

#include "fusereg/errors.hpp"
#include "fusereg/linalg.hpp"

namespace fusereg {

struct PcaResult {
  Vector mean;         // column means of the input
  Matrix components;   // dim x d, rows are principal directions
  Vector eigenvalues;  // all d sample-covariance eigenvalues, descending
  Matrix transformed;  // n x dim scores
};

// Mean-centered principal components via eigendecomposition of the
// sample covariance. Each direction is signed so its largest-magnitude
// entry is positive (first such entry on ties).
inline PcaResult pca(const Matrix& data, int dim) {
  if (data.rows() < 1) throw data_error("pca: empty input");
  const Eigen::Index d = data.cols();
  if (dim < 1 || dim > d)
    throw data_error("pca: target dimension " + std::to_string(dim) +
                     " out of range for input dimension " + std::to_string(d));

  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  Matrix centered = data.rowwise() - r.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw numeric_error("pca: eigendecomposition failed");

  r.eigenvalues = eig.eigenvalues().reverse();
  r.components.resize(dim, d);
  for (int k = 0; k < dim; ++k) {
    Vector v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(lead))) lead = i;
    if (v(lead) < 0) v = -v;
    r.components.row(k) = v.transpose();
  }
  r.transformed = centered * r.components.transpose();
  return r;
}

inline Matrix pca_reconstruct(const PcaResult& r) {
  return (r.transformed * r.components).rowwise() + r.mean.transpose();
}

inline Matrix pca_apply(const PcaResult& r, const Matrix& data) {
  if (data.cols() != r.mean.size()) throw data_error("pca_apply: dimension mismatch");
  return (data.rowwise() - r.mean.transpose()) * r.components.transpose();
}

}  // namespace fusereg
