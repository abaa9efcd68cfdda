#pragma once

// Discrete-time Weinberger recursion on the plane-wave reduction
//   f_{n+1}(s) = max{ phi(s), (Q~_T f_n)(s + c) },
// where Q~_T is the time-T map of the 1D equation with marginal kernels, and
// the threshold c_T^* = sup{c : f_{T,c}(+inf) = theta} found by bisection.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/grid.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/model.hpp"
#include "nkpp/solver.hpp"

namespace nkpp {

/// Marginal kernels along one direction.
struct ReducedKernels {
  Direction xi;
  KernelSpec plus;
  KernelSpec minus;

  static ReducedKernels along(const KernelSpec& a_plus, const KernelSpec& a_minus, const Direction& xi) {
    ReducedKernels r{xi, marginal_1d(a_plus, xi), {}};
    r.minus = a_minus == a_plus ? r.plus : marginal_1d(a_minus, xi);
    return r;
  }
};

struct WeinbergerOptions {
  double plateau = 0.5;       ///< phi(-inf) / theta, in (0, 1)
  double ramp = 1.0;          ///< phi falls linearly to 0 over [-ramp, 0]
  double window_scale = 40.0;  ///< window length = window_scale * max(1, 2|c|)
  double target_h = 0.125;     ///< largest s-grid spacing
  double dt = 0.1;  ///< capped by the stability bound
  int budget = 2000;
  double sub_threshold = 0.9;    ///< tail > 0.9 theta: subcritical
  double super_threshold = 0.1;  ///< tail < 0.1 theta and stagnant: supercritical
  double stagnation = 1e-8;      ///< sup-norm increment, relative to theta
  double monotone_tol = 1e-9;    ///< allowed decrease f_{n+1} - f_n, relative to theta
};

/// Uniform s-grid (window) embedded in a periodic grid twice as long; the
/// padding on each side holds the constant extension of the window's edge
/// values.
class IterationState {
 public:
  IterationState(const ReducedKernels& k, const ModelParams& p, double T, double c, const WeinbergerOptions& opt)
      : T_(T), c_(c), opt_(opt), theta_(p.theta()) {
    if (!(T > 0)) throw DomainError("Weinberger iteration: T must be positive");
    if (!(opt.plateau > 0 && opt.plateau < 1)) throw DomainError("Weinberger iteration: plateau must be in (0, 1)");
    const double W = opt.window_scale * std::max(1.0, 2.0 * std::abs(c));
    int n = 1024;
    while (2.0 * W / n > opt.target_h) n *= 2;
    s_lo_ = -0.25 * W;
    s_hi_ = 0.75 * W;
    SimConfig cfg;
    cfg.grid = Grid::line(n, 2.0 * W, s_lo_ - 0.5 * W);
    cfg.params = p;
    cfg.kernel_plus = k.plus;
    cfg.kernel_minus = k.minus;
    cfg.dt = std::min(opt.dt, cfg.dt_max());
    cfg.t_end = T;
    cfg.snapshot_stride = 1 << 30;
    solver_.emplace(cfg);
    grid_ = cfg.grid;
    first_ = static_cast<int>(std::lround((s_lo_ - grid_.lower[0]) / grid_.h()));
    last_ = static_cast<int>(std::lround((s_hi_ - grid_.lower[0]) / grid_.h()));
    phi_.resize(grid_.size());
    for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] = seed(grid_.coord(0, static_cast<int>(i)));
    f_ = Field(grid_, 0.0);
    f_.values = phi_;
    pad(f_.values);
  }

  double seed(double s) const { return opt_.plateau * theta_ * std::clamp(-s / opt_.ramp, 0.0, 1.0); }

  /// f_{n+1} = max{phi, (Q~_T f_n)(. + c)}; returns the sup-norm increment.
  double update() {
    Field q = f_;
    q.t = 0;
    solver_->advance(q, T_);
    std::vector<double> next(f_.values.size());
    const double h = grid_.h();
    double increment = 0;
    for (int i = first_; i <= last_; ++i) {
      const double s = grid_.coord(0, i) + c_;
      const double u = (s - grid_.lower[0]) / h;
      const int j = std::clamp(static_cast<int>(std::floor(u)), 0, static_cast<int>(grid_.size()) - 2);
      const double t = u - j;
      const double shifted = (1 - t) * q.values[j] + t * q.values[j + 1];
      double v = std::max(phi_[i], shifted);
      const double prev = f_.values[i];
      if (v < prev - opt_.monotone_tol * theta_) {
        std::ostringstream os;
        os << "Weinberger iteration lost monotonicity at s=" << grid_.coord(0, i) << ": " << v << " < " << prev;
        throw NumericalError(os.str());
      }
      v = std::max(v, prev);
      increment = std::max(increment, v - prev);
      next[i] = v;
    }
    f_.values = std::move(next);
    pad(f_.values);
    ++n_;
    return increment;
  }

  double tail() const { return f_.values[last_]; }
  int iterations() const { return n_; }
  double theta() const { return theta_; }
  const Grid& grid() const { return grid_; }
  int window_first() const { return first_; }
  int window_last() const { return last_; }
  const std::vector<double>& values() const { return f_.values; }
  const std::vector<double>& seed_values() const { return phi_; }

 private:
  void pad(std::vector<double>& v) const {
    for (int i = 0; i < first_; ++i) v[i] = v[first_];
    for (int i = last_ + 1; i < static_cast<int>(v.size()); ++i) v[i] = v[last_];
  }

  double T_, c_;
  WeinbergerOptions opt_;
  double theta_;
  double s_lo_ = 0, s_hi_ = 0;
  Grid grid_;
  int first_ = 0, last_ = 0;
  std::optional<Solver> solver_;
  std::vector<double> phi_;
  Field f_;
  int n_ = 0;
};

/// One evaluation of the time-T reduced map on f (same padding as the iteration).
inline std::vector<double> reduced_step(const std::vector<double>& f, const Grid& g, double T,
                                        const ReducedKernels& k, const ModelParams& p, double dt = 0.05) {
  SimConfig cfg;
  cfg.grid = g;
  cfg.params = p;
  cfg.kernel_plus = k.plus;
  cfg.kernel_minus = k.minus;
  cfg.dt = std::min(dt, cfg.dt_max());
  cfg.t_end = T;
  Solver s(cfg);
  Field u(g, 0.0);
  u.values = f;
  s.advance(u, T);
  return u.values;
}

enum class SpeedClass { supercritical, subcritical, undecided };

inline std::string to_string(SpeedClass c) {
  switch (c) {
    case SpeedClass::supercritical: return "supercritical";
    case SpeedClass::subcritical: return "subcritical";
    case SpeedClass::undecided: return "undecided";
  }
  return "undecided";
}

struct Classification {
  double c = 0;
  SpeedClass cls = SpeedClass::undecided;
  int iterations = 0;
  double tail = 0;
  double last_increment = 0;
  bool dichotomy_violation = false;  ///< converged with tail strictly between the thresholds
};

/// Iterates until the tail decides the class or the budget runs out.
inline Classification classify_speed(double T, double c, const ReducedKernels& k, const ModelParams& p,
                                     const WeinbergerOptions& opt = {}) {
  if (opt.budget < 1) throw DomainError("classify_speed: budget must be >= 1");
  IterationState st(k, p, T, c, opt);
  Classification r;
  r.c = c;
  const double theta = st.theta();
  for (int n = 0; n < opt.budget; ++n) {
    const double inc = st.update();
    r.last_increment = inc;
    r.tail = st.tail();
    r.iterations = st.iterations();
    if (r.tail > opt.sub_threshold * theta) {
      r.cls = SpeedClass::subcritical;
      return r;
    }
    if (inc < opt.stagnation * theta) {
      if (r.tail < opt.super_threshold * theta) r.cls = SpeedClass::supercritical;
      else r.dichotomy_violation = true;
      return r;
    }
  }
  return r;
}

struct CStarEstimate {
  double T = 0;
  double c_lo = 0;  ///< largest trial classified subcritical
  double c_hi = 0;  ///< smallest trial classified supercritical
  bool conclusive = false;
  std::string diagnostics;
  std::vector<Classification> trials;

  double midpoint() const { return 0.5 * (c_lo + c_hi); }
  /// Estimate of c_* = c_T^* / T.
  double speed() const { return midpoint() / T; }
};

/// Brackets c_T^*(xi): geometric expansion from c = 0 with step T, then
/// bisection to c_hi - c_lo <= tol (default 0.02 T). Undecided trials are
/// re-run with doubled budgets up to `max_doublings` times.
inline CStarEstimate estimate_cT_star(double T, const ReducedKernels& k, const ModelParams& p, double tol = 0.0,
                                      const WeinbergerOptions& opt = {}, int max_doublings = 2) {
  if (!(tol > 0)) tol = 0.02 * T;
  CStarEstimate est;
  est.T = T;
  auto run = [&](double c) -> SpeedClass {
    WeinbergerOptions o = opt;
    for (int d = 0; d <= max_doublings; ++d) {
      const auto r = classify_speed(T, c, k, p, o);
      est.trials.push_back(r);
      if (r.cls != SpeedClass::undecided) return r.cls;
      o.budget *= 2;
    }
    return SpeedClass::undecided;
  };
  auto fail = [&](double c) {
    std::ostringstream os;
    os << "trial c=" << c << " stayed undecided after " << max_doublings << " budget doublings";
    est.diagnostics = os.str();
    est.conclusive = false;
    return est;
  };

  const SpeedClass at0 = run(0.0);
  if (at0 == SpeedClass::undecided) return fail(0.0);
  double step = T;
  if (at0 == SpeedClass::subcritical) {
    est.c_lo = 0.0;
    for (int i = 0;; ++i) {
      if (i > 30) throw NumericalError("estimate_cT_star: no supercritical speed found");
      const SpeedClass s = run(step);
      if (s == SpeedClass::undecided) return fail(step);
      if (s == SpeedClass::supercritical) {
        est.c_hi = step;
        break;
      }
      est.c_lo = step;
      step *= 2;
    }
  } else {
    est.c_hi = 0.0;
    for (int i = 0;; ++i) {
      if (i > 30) throw NumericalError("estimate_cT_star: no subcritical speed found");
      const SpeedClass s = run(-step);
      if (s == SpeedClass::undecided) return fail(-step);
      if (s == SpeedClass::subcritical) {
        est.c_lo = -step;
        break;
      }
      est.c_hi = -step;
      step *= 2;
    }
  }
  while (est.c_hi - est.c_lo > tol) {
    const double mid = est.midpoint();
    const SpeedClass s = run(mid);
    if (s == SpeedClass::undecided) return fail(mid);
    (s == SpeedClass::subcritical ? est.c_lo : est.c_hi) = mid;
  }
  est.conclusive = true;
  return est;
}

}  // namespace nkpp
