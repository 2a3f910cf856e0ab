#pragma once

#include <stdexcept>
#include <string>

namespace kmarket {

/// Invalid model input or a numerical breakdown inside a solver.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent scenario configuration. The message names the
/// offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kmarket
