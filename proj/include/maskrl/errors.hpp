#pragma once

#include <stdexcept>
#include <string>

namespace maskrl {

/// Invalid sizes, names or hyperparameters supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tensor shapes that do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API called out of order (backward before forward, step after done, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure during optimisation (non-finite loss or gradients).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace maskrl
