#pragma once

#include <stdexcept>
#include <string>

namespace topdown {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError -> 2, DataError -> 3, NumericError -> 4, anything else -> 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite losses or gradients during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape / contract violations.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace topdown
