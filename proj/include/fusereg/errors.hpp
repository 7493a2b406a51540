#pragma once

#include <stdexcept>
#include <string>

namespace fusereg {

// Invalid inputs: empty sample sets, dimension mismatches, malformed
// tables or files.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// A computation cannot proceed numerically: non-finite values, invalid
// covariance blocks, and the like.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment configuration (unknown keys, unparseable values).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A property or self-check that should hold by construction failed.
class property_error : public std::runtime_error {
 public:
  explicit property_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fusereg
