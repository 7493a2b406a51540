#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/linalg.hpp"

namespace fusereg {

struct LabeledPair {
  Vector x;
  Vector y;
};

struct UnlabeledPair {
  Vector x1;
  Vector x2;
};

// One draw from the joint model; used by samplers, test sets and the
// discrete tables. x2 may be empty when only one domain is observed.
struct Atom {
  Vector x1;
  Vector x2;
  Vector y;
};

struct CorpusDims {
  int m1 = 0;  // domain-1 input dimension
  int m2 = 0;  // domain-2 input dimension
  int n = 0;   // target dimension
};

// The semi-supervised training data: a few (x1,y) pairs, a few (x2,y)
// pairs and many unlabeled (x1,x2) pairs. Immutable once built.
class TrainingCorpus {
 public:
  TrainingCorpus(std::vector<LabeledPair> labeled1, std::vector<LabeledPair> labeled2,
                 std::vector<UnlabeledPair> unlabeled, CorpusDims dims)
      : labeled1_(std::move(labeled1)),
        labeled2_(std::move(labeled2)),
        unlabeled_(std::move(unlabeled)),
        dims_(dims) {
    if (dims_.m1 < 1 || dims_.m2 < 1 || dims_.n < 1)
      throw data_error("TrainingCorpus: dimensions must be positive");
    if (unlabeled_.empty())
      throw data_error("TrainingCorpus: at least one unlabeled pair is required");
    check_pairs(labeled1_, dims_.m1, "labeled1");
    check_pairs(labeled2_, dims_.m2, "labeled2");
    for (std::size_t i = 0; i < unlabeled_.size(); ++i) {
      if (unlabeled_[i].x1.size() != dims_.m1 || unlabeled_[i].x2.size() != dims_.m2)
        throw data_error("TrainingCorpus: unlabeled[" + std::to_string(i) +
                         "] has inconsistent dimensions");
      if (!unlabeled_[i].x1.allFinite() || !unlabeled_[i].x2.allFinite())
        throw numeric_error("TrainingCorpus: non-finite value in unlabeled[" +
                            std::to_string(i) + "]");
    }
  }

  const std::vector<LabeledPair>& labeled1() const { return labeled1_; }
  const std::vector<LabeledPair>& labeled2() const { return labeled2_; }
  const std::vector<UnlabeledPair>& unlabeled() const { return unlabeled_; }
  const CorpusDims& dims() const { return dims_; }

  // Same data with the two domains exchanged.
  TrainingCorpus swapped() const {
    std::vector<UnlabeledPair> u;
    u.reserve(unlabeled_.size());
    for (const auto& p : unlabeled_) u.push_back({p.x2, p.x1});
    return TrainingCorpus(labeled2_, labeled1_, std::move(u),
                          CorpusDims{dims_.m2, dims_.m1, dims_.n});
  }

 private:
  void check_pairs(const std::vector<LabeledPair>& pairs, int xdim, const std::string& name) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].x.size() != xdim || pairs[i].y.size() != dims_.n)
        throw data_error("TrainingCorpus: " + name + "[" + std::to_string(i) +
                         "] has inconsistent dimensions");
      if (!pairs[i].x.allFinite() || !pairs[i].y.allFinite())
        throw numeric_error("TrainingCorpus: non-finite value in " + name + "[" +
                            std::to_string(i) + "]");
    }
  }

  std::vector<LabeledPair> labeled1_;
  std::vector<LabeledPair> labeled2_;
  std::vector<UnlabeledPair> unlabeled_;
  CorpusDims dims_;
};

}  // namespace fusereg
