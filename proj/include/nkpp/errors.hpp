#pragma once

#include <stdexcept>
#include <string>

namespace nkpp {

/// Invalid user-facing configuration (bad kernel parameters, malformed files, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (non-convergence, NaN/Inf, monotonicity loss).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. lambda >= abscissa).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A standing assumption needed by an operation does not hold.
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field left the tube [0, theta] by more than the clamping tolerance.
class TubeViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The solution reached the periodic wrap seam during a front-tracking run.
class SeamContamination : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Should-not-happen condition (e.g. an empty front polytope).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace nkpp
