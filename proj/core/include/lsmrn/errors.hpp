#pragma once

#include <stdexcept>
#include <string>

namespace lsmrn {

/// Invalid hyperparameters, flags, or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (files, readings, snapshot series).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lsmrn
