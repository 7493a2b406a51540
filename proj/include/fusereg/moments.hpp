#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/linalg.hpp"

namespace fusereg {

// Named collection of second-moment blocks E[a b^T]. Blocks are stored
// one direction only; get() transposes on the fly when asked for the
// other orientation.
class MomentSet {
 public:
  void insert(const std::string& role_a, const std::string& role_b, Matrix block,
              std::size_t sample_count) {
    if (!block.allFinite())
      throw numeric_error("MomentSet: non-finite entries in block (" + role_a + "," + role_b + ")");
    if (role_a == role_b) {
      if (block.rows() != block.cols())
        throw data_error("MomentSet: block (" + role_a + "," + role_b + ") must be square");
      if (max_abs(block - block.transpose()) > 1e-10)
        throw data_error("MomentSet: block (" + role_a + "," + role_b + ") is not symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (block + block.transpose()));
      const double scale = 1.0 + eig.eigenvalues().cwiseAbs().maxCoeff();
      if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
        throw data_error("MomentSet: block (" + role_a + "," + role_b + ") is not positive semidefinite");
    }
    if (auto it = blocks_.find({role_b, role_a}); it != blocks_.end()) {
      if (it->second.rows() != block.cols() || it->second.cols() != block.rows() ||
          max_abs(it->second - block.transpose()) > 1e-10)
        throw data_error("MomentSet: block (" + role_a + "," + role_b +
                         ") disagrees with stored transpose");
    }
    blocks_[{role_a, role_b}] = std::move(block);
    counts_[{role_a, role_b}] = sample_count;
  }

  bool has(const std::string& role_a, const std::string& role_b) const {
    return blocks_.count({role_a, role_b}) > 0 || blocks_.count({role_b, role_a}) > 0;
  }

  Matrix get(const std::string& role_a, const std::string& role_b) const {
    if (auto it = blocks_.find({role_a, role_b}); it != blocks_.end()) return it->second;
    if (auto it = blocks_.find({role_b, role_a}); it != blocks_.end())
      return it->second.transpose();
    throw data_error("MomentSet: no block for roles (" + role_a + "," + role_b + ")");
  }

  std::size_t sample_count(const std::string& role_a, const std::string& role_b) const {
    if (auto it = counts_.find({role_a, role_b}); it != counts_.end()) return it->second;
    if (auto it = counts_.find({role_b, role_a}); it != counts_.end()) return it->second;
    throw data_error("MomentSet: no block for roles (" + role_a + "," + role_b + ")");
  }

 private:
  std::map<std::pair<std::string, std::string>, Matrix> blocks_;
  std::map<std::pair<std::string, std::string>, std::size_t> counts_;
};

// Mean of outer products a_i b_i^T over any range, with per-element
// accessors. Dimension mismatches name the offending index.
template <class Range, class GetA, class GetB>
Matrix mean_outer(const Range& samples, GetA get_a, GetB get_b, const std::string& what) {
  const std::size_t n = std::size(samples);
  if (n == 0) throw data_error(what + ": no samples");
  auto it = std::begin(samples);
  const Vector a0 = get_a(*it);
  const Vector b0 = get_b(*it);
  Matrix sum = Matrix::Zero(a0.size(), b0.size());
  std::size_t i = 0;
  for (; it != std::end(samples); ++it, ++i) {
    const Vector a = get_a(*it);
    const Vector b = get_b(*it);
    if (a.size() != a0.size() || b.size() != b0.size())
      throw data_error(what + ": dimension mismatch at sample " + std::to_string(i));
    if (!a.allFinite() || !b.allFinite())
      throw numeric_error(what + ": non-finite value at sample " + std::to_string(i));
    sum.noalias() += a * b.transpose();
  }
  return sum / static_cast<double>(n);
}

inline Matrix sample_cross_moment(const std::vector<std::pair<Vector, Vector>>& samples,
                                  const std::string& what = "sample_cross_moment") {
  return mean_outer(
      samples, [](const auto& p) { return p.first; }, [](const auto& p) { return p.second; },
      what);
}

inline MomentSet estimate_moments(const std::vector<std::pair<Vector, Vector>>& samples,
                                  const std::string& role_a = "a",
                                  const std::string& role_b = "b") {
  MomentSet out;
  out.insert(role_a, role_b, sample_cross_moment(samples, "estimate_moments"), samples.size());
  return out;
}

}  // namespace fusereg
