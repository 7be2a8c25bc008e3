#pragma once

#include <stdexcept>
#include <string>

namespace viability {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradient of the level function vanishes where a normal is required.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

/// Boundary projection did not converge within the iteration budget.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature stalled before reaching the requested tolerance.
class ToleranceNotMet : public Error {
 public:
  using Error::Error;
};

/// A state or coefficient evaluation overflowed.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// Simulation was started from a point outside the domain.
class ImmediateExit : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace viability
