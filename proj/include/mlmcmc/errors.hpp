#pragma once

#include <stdexcept>
#include <string>

namespace mlmcmc {

/// Bad dimensions, invalid arguments, failed factorizations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A forward model or log target misbehaved (NaN density, solver failure,
/// stuck chain).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlmcmc
