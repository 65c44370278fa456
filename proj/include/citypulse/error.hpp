#pragma once

#include <stdexcept>
#include <string>

namespace citypulse {

/// Input data failed validation (bad files, duplicate records, invalid
/// geometry). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an out-of-contract argument (k > n, empty type list,
/// non-positive threshold, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace citypulse
