#pragma once

#include <sstream>

#include "nkpp/errors.hpp"

namespace nkpp {

/// Rate constants of the doubly nonlocal equation
///   u_t = kappa_plus (a+ * u) - m u - u (kappa_l u + kappa_nl (a- * u)).
struct ModelParams {
  double kappa_plus = 2.0;
  double m = 1.0;
  double kappa_l = 0.0;
  double kappa_nl = 1.0;

  double kappa_minus() const { return kappa_l + kappa_nl; }
  /// Net growth rate kappa_plus - m.
  double beta() const { return kappa_plus - m; }
  /// Positive constant equilibrium (kappa_plus - m) / kappa_minus.
  double theta() const { return beta() / kappa_minus(); }
  bool satisfies_a1() const { return kappa_plus > m; }

  /// Basic sign checks. (A1) is checked separately because the linear
  /// majorant is also exercised with m = kappa_plus.
  void validate() const {
    std::ostringstream os;
    if (!(kappa_plus > 0)) os << "kappa_plus must be positive; ";
    if (!(m > 0)) os << "m must be positive; ";
    if (!(kappa_l >= 0)) os << "kappa_l must be nonnegative; ";
    if (!(kappa_nl >= 0)) os << "kappa_nl must be nonnegative; ";
    if (!(kappa_minus() > 0)) os << "kappa_l + kappa_nl must be positive; ";
    if (!os.str().empty()) throw ConfigError("invalid model parameters: " + os.str());
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

}  // namespace nkpp
