#pragma once

// Front measurements on trajectories: level-set positions along rays, decay
// ahead of t T_out, convergence to theta inside t T_*, exponential smallness
// outside, and relaxation to stationary states.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/grid.hpp"
#include "nkpp/polytope.hpp"
#include "nkpp/solver.hpp"
#include "nkpp/speed.hpp"
#include "nkpp/stats.hpp"

namespace nkpp {

/// Periodic multilinear interpolation of a field at x.
inline double sample_field(const Field& f, const Vec& x) {
  const Grid& g = f.grid;
  auto locate = [&](int a, int& i0, double& t) {
    double u = (x[a] - g.lower[a]) / g.h(a);
    u -= std::floor(u / g.n[a]) * g.n[a];
    i0 = static_cast<int>(std::floor(u));
    t = u - i0;
    if (i0 >= g.n[a]) i0 -= g.n[a];
  };
  int ix, iy = 0;
  double tx, ty = 0;
  locate(0, ix, tx);
  const int jx = (ix + 1) % g.n[0];
  if (g.dim == 1) return (1 - tx) * f.values[ix] + tx * f.values[jx];
  locate(1, iy, ty);
  const int jy = (iy + 1) % g.n[1];
  return (1 - tx) * ((1 - ty) * f.values[g.index(ix, iy)] + ty * f.values[g.index(ix, jy)]) +
         tx * ((1 - ty) * f.values[g.index(jx, iy)] + ty * f.values[g.index(jx, jy)]);
}

/// Distance from the origin to the domain boundary along xi.
inline double ray_extent(const Grid& g, const Direction& xi) {
  double s = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.dim; ++a) {
    if (xi[a] > 1e-15) s = std::min(s, (g.upper(a) - g.h(a)) / xi[a]);
    else if (xi[a] < -1e-15) s = std::min(s, g.lower[a] / xi[a]);
  }
  return s;
}

/// s_l = sup{s >= 0 : u(s xi) >= level} along the ray from the origin, with
/// linear interpolation between ray samples. nullopt when the level is not
/// attained on the ray.
inline std::optional<double> level_position(const Field& f, const Direction& xi, double level) {
  const Grid& g = f.grid;
  double step = g.h(0);
  if (g.dim == 2) step = std::min(step, g.h(1));
  const double smax = ray_extent(g, xi);
  const int n = static_cast<int>(std::floor(smax / step));
  std::optional<double> pos;
  double prev = sample_field(f, 0.0 * xi.vec());
  if (prev >= level) pos = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double s = k * step;
    const double v = sample_field(f, s * xi.vec());
    if (v >= level) pos = s;
    else if (prev >= level) pos = (k - 1) * step + step * (prev - level) / (prev - v);
    prev = v;
  }
  return pos;
}

struct FrontTrace {
  Direction xi;
  double level = 0;
  double ray_length = 0;  ///< distance from the origin to the domain edge along xi
  std::vector<double> times;
  std::vector<double> positions;  ///< NaN where the level is not attained
  stats::LinearFit fit;
  std::size_t fit_first = 0;  ///< index of the first snapshot in the fit window

  bool empty() const {
    return std::none_of(positions.begin(), positions.end(), [](double p) { return std::isfinite(p); });
  }
  double slope() const { return fit.slope; }
};

struct TrackOptions {
  double window_fraction = 0.5;  ///< fit the last half of the snapshots
  double edge_margin = 0.1;      ///< drop snapshots with the front within this fraction of the edge
  std::size_t min_points = 5;
};

/// Fits s_l(t) = intercept + slope * t over the fit window.
inline void fit_trace(FrontTrace& tr, const TrackOptions& opt = {}) {
  const std::size_t n = tr.times.size();
  tr.fit_first = n - static_cast<std::size_t>(std::ceil(opt.window_fraction * n));
  std::vector<double> t, s;
  for (std::size_t i = tr.fit_first; i < n; ++i) {
    if (!std::isfinite(tr.positions[i])) continue;
    if (tr.positions[i] > (1.0 - opt.edge_margin) * tr.ray_length) continue;
    t.push_back(tr.times[i]);
    s.push_back(tr.positions[i]);
  }
  tr.fit = stats::LinearFit{};
  if (t.size() >= std::max<std::size_t>(opt.min_points, 3)) tr.fit = stats::ols(t, s);
}

/// Incremental tracker for use as a snapshot observer.
class LevelTracker {
 public:
  LevelTracker(const Direction& xi, double level) {
    tr_.xi = xi;
    tr_.level = level;
  }
  void operator()(const Field& f) {
    if (tr_.times.empty()) tr_.ray_length = ray_extent(f.grid, tr_.xi);
    tr_.times.push_back(f.t);
    const auto p = level_position(f, tr_.xi, tr_.level);
    tr_.positions.push_back(p ? *p : std::numeric_limits<double>::quiet_NaN());
  }
  FrontTrace finish(const TrackOptions& opt = {}) {
    fit_trace(tr_, opt);
    return tr_;
  }
  const FrontTrace& trace() const { return tr_; }

 private:
  FrontTrace tr_;
};

/// Level-set trace along xi with OLS slope. A zero trajectory gives an empty trace.
inline FrontTrace track_level_set(const std::vector<Field>& snapshots, const Direction& xi, double level,
                                  const TrackOptions& opt = {}) {
  if (!(level > 0)) throw DomainError("track_level_set: level must be positive");
  LevelTracker t(xi, level);
  for (const auto& s : snapshots) t(s);
  return t.finish(opt);
}

/// Points s_l(xi_k) xi_k on `rays` equally spaced rays (2D), in angular order.
inline std::vector<Vec> level_polygon(const Field& f, double level, int rays) {
  std::vector<Vec> out;
  for (const auto& xi : default_directions(2, rays)) {
    const auto p = level_position(f, xi, level);
    if (p) out.push_back(*p * xi.vec());
  }
  return out;
}

struct DecayPoint {
  double t = 0;
  double measured = 0;  ///< max of u over x.xi >= t (c_* + delta)
  double bound = 0;     ///< ||u0||_{lambda_*,xi} exp(-lambda_* delta t)
  bool checked = false;  ///< t beyond burn-in
  bool pass = true;
};

struct DecayCheckResult {
  Direction xi;
  double lambda_star = 0;
  double c_star = 0;
  double delta = 0;
  double u0_norm = 0;
  std::vector<DecayPoint> points;
  bool truncated = false;  ///< some snapshots had an empty region on the grid
  bool pass = false;

  double max_ratio() const {
    double r = 0;
    for (const auto& p : points) {
      if (p.checked && p.bound > 0) r = std::max(r, p.measured / p.bound);
    }
    return r;
  }
};

/// Compares sup over {x.xi >= t(c_* + delta)} of u with
/// ||u0||_{lambda_*,xi} e^{-lambda_* delta t}. The norm is taken from the first
/// snapshot unless `u0_norm` is given.
inline DecayCheckResult check_decay_outside(const std::vector<Field>& snapshots, const SpeedResult& speed,
                                            double delta, double burn_in = 0.0,
                                            std::optional<double> u0_norm = std::nullopt) {
  if (!speed.finite() || !speed.lambda_star) throw DomainError("check_decay_outside: needs a finite speed");
  if (snapshots.empty()) throw DomainError("check_decay_outside: empty trajectory");
  DecayCheckResult r;
  r.xi = speed.xi;
  r.lambda_star = *speed.lambda_star;
  r.c_star = speed.c_star.value();
  r.delta = delta;
  r.u0_norm = u0_norm ? *u0_norm : weighted_norm(snapshots.front(), speed.xi, r.lambda_star);
  r.pass = true;
  for (const auto& f : snapshots) {
    DecayPoint p;
    p.t = f.t;
    const double edge = f.t * (r.c_star + delta);
    bool any = false;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (speed.xi.dot(f.grid.point(i)) >= edge) {
        any = true;
        p.measured = std::max(p.measured, f.values[i]);
      }
    }
    if (!any) {
      r.truncated = true;
      continue;
    }
    p.bound = r.u0_norm * std::exp(-r.lambda_star * delta * f.t);
    p.checked = f.t >= burn_in;
    p.pass = !p.checked || p.measured <= p.bound * (1 + 1e-6) + 1e-12;
    r.pass = r.pass && p.pass;
    r.points.push_back(p);
  }
  return r;
}

struct InsidePoint {
  double t = 0;
  double min_value = 0;
  std::size_t points = 0;
};

struct InsideCheckResult {
  double theta = 0;
  double shrink = 0;
  std::vector<InsidePoint> series;
  /// theta - min over the shrunk set at the last snapshot with a nonempty set.
  double final_deficit() const { return series.empty() ? theta : theta - series.back().min_value; }
};

/// min of u over shrink * t * T for one snapshot (nullopt when no node is inside).
inline std::optional<InsidePoint> min_inside_scaled(const Field& f, const FrontPolytope& polytope, double shrink) {
  InsidePoint p;
  p.t = f.t;
  p.min_value = std::numeric_limits<double>::infinity();
  const double scale = f.t * shrink;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (polytope.gauge(f.grid.point(i)) <= scale) {
      ++p.points;
      p.min_value = std::min(p.min_value, f.values[i]);
    }
  }
  if (p.points == 0) return std::nullopt;
  return p;
}

/// min of u over grid points of t * shrink * T_* per snapshot.
inline InsideCheckResult check_theta_inside(const std::vector<Field>& snapshots, const FrontPolytope& polytope,
                                            double shrink, double theta) {
  if (!(shrink > 0 && shrink < 1)) throw DomainError("check_theta_inside: shrink must be in (0, 1)");
  InsideCheckResult r;
  r.theta = theta;
  r.shrink = shrink;
  for (const auto& f : snapshots) {
    if (auto p = min_inside_scaled(f, polytope, shrink)) r.series.push_back(*p);
  }
  return r;
}

/// Compact region Y: an axis box, or a gauge band {x : lo <= gauge_T(x) <= hi}
/// with respect to a polytope containing 0 in its interior.
struct BoxRegion {
  Vec lo, hi;
};
struct GaugeBand {
  double lo = 1.2, hi = 1.5;
};
using CompactRegion = std::variant<BoxRegion, GaugeBand>;

struct ExponentialFit {
  std::vector<double> times;
  std::vector<double> sup_values;
  double nu = 0;  ///< fitted decay rate of sup over t Y
  double D = 0;
  double r2 = 0;
  bool trivial = false;  ///< the solution vanished on t Y for all fitted snapshots
  bool truncated = false;
  bool pass = false;
};

/// Sup of u over t Y for one snapshot; nullopt when t <= 0, when t Y leaves
/// the grid (`truncated` is set) or when no node falls in t Y.
inline std::optional<double> sup_over_scaled_region(const Field& f, const CompactRegion& region,
                                                    const FrontPolytope& polytope, bool* truncated = nullptr) {
  if (!(f.t > 0)) return std::nullopt;
  const Grid& g = f.grid;
  bool inside = true;
  if (const auto* b = std::get_if<BoxRegion>(&region)) {
    for (int a = 0; a < g.dim; ++a)
      inside = inside && f.t * b->lo[a] >= g.lower[a] && f.t * b->hi[a] <= g.upper(a) - g.h(a);
  } else {
    const auto& band = std::get<GaugeBand>(region);
    if (!polytope.bounded) throw DomainError("gauge band needs a bounded polytope");
    for (const auto& v : polytope.vertices) {
      for (int a = 0; a < g.dim; ++a) {
        const double x = f.t * band.hi * v[a];
        inside = inside && x >= g.lower[a] && x <= g.upper(a) - g.h(a);
      }
    }
  }
  if (!inside) {
    if (truncated) *truncated = true;
    return std::nullopt;
  }
  double sup = 0;
  bool any = false;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const Vec y = (1.0 / f.t) * g.point(i);
    bool in = false;
    if (const auto* b = std::get_if<BoxRegion>(&region)) {
      in = true;
      for (int a = 0; a < g.dim; ++a) in = in && y[a] >= b->lo[a] && y[a] <= b->hi[a];
    } else {
      const auto& band = std::get<GaugeBand>(region);
      const double gv = polytope.gauge(y);
      in = gv >= band.lo && gv <= band.hi;
    }
    if (in) {
      any = true;
      sup = std::max(sup, f.values[i]);
    }
  }
  if (!any) return std::nullopt;
  return sup;
}

/// Fits sup = D e^{-nu t} over the last `window_fraction` of the samples.
inline void fit_exponential(ExponentialFit& out, double window_fraction = 0.5, double min_r2 = 0.99) {
  const std::size_t n = out.times.size();
  const std::size_t first = n - static_cast<std::size_t>(std::ceil(window_fraction * n));
  std::vector<double> t, ly;
  bool all_zero = true;
  for (std::size_t i = first; i < n; ++i) {
    if (out.sup_values[i] > 0) {
      all_zero = false;
      t.push_back(out.times[i]);
      ly.push_back(std::log(out.sup_values[i]));
    }
  }
  if (n > 0 && all_zero) {
    out.trivial = true;
    out.nu = std::numeric_limits<double>::infinity();
    out.r2 = 1.0;
    out.pass = true;
    return;
  }
  const auto fit = stats::ols(t, ly);
  if (!fit.ok) return;
  out.nu = -fit.slope;
  out.D = std::exp(fit.intercept);
  out.r2 = fit.r2;
  out.pass = out.nu > 0 && out.r2 > min_r2;
}

/// Sup of u over t Y per snapshot, fitted as D e^{-nu t} over the last
/// `window_fraction` of usable snapshots (t > 0, region inside the grid).
inline ExponentialFit check_exponential_outside(const std::vector<Field>& snapshots, const CompactRegion& region,
                                                const FrontPolytope& polytope, double window_fraction = 0.5,
                                                double min_r2 = 0.99) {
  ExponentialFit out;
  for (const auto& f : snapshots) {
    if (const auto sup = sup_over_scaled_region(f, region, polytope, &out.truncated)) {
      out.times.push_back(f.t);
      out.sup_values.push_back(*sup);
    }
  }
  fit_exponential(out, window_fraction, min_r2);
  return out;
}

/// s(t)/t over the last half of a trace, and whether it increases strictly.
struct SuperlinearityResult {
  std::vector<double> times;
  std::vector<double> ratios;
  bool increasing = false;
};

inline SuperlinearityResult check_superlinear(const FrontTrace& tr, double window_fraction = 0.5) {
  SuperlinearityResult r;
  const std::size_t n = tr.times.size();
  const std::size_t first = n - static_cast<std::size_t>(std::ceil(window_fraction * n));
  for (std::size_t i = first; i < n; ++i) {
    if (!(tr.times[i] > 0) || !std::isfinite(tr.positions[i])) continue;
    r.times.push_back(tr.times[i]);
    r.ratios.push_back(tr.positions[i] / tr.times[i]);
  }
  r.increasing = r.ratios.size() >= 3;
  for (std::size_t i = 1; i < r.ratios.size(); ++i) r.increasing = r.increasing && r.ratios[i] > r.ratios[i - 1];
  return r;
}

/// min of the field over the closed ball B_r(center).
inline double min_over_ball(const Field& f, const Vec& center, double r) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if ((f.grid.point(i) - center).norm() <= r) m = std::min(m, f.values[i]);
  }
  return m;
}

enum class StationaryClass { converged_to_0, converged_to_theta, neither };

inline std::string to_string(StationaryClass c) {
  switch (c) {
    case StationaryClass::converged_to_0: return "converged_to_0";
    case StationaryClass::converged_to_theta: return "converged_to_theta";
    case StationaryClass::neither: return "neither";
  }
  return "neither";
}

struct StationaryResult {
  StationaryClass classification = StationaryClass::neither;
  double dist_to_zero = 0;   ///< max |u| on the central window
  double dist_to_theta = 0;  ///< max |u - theta| on the central window
  double t_end = 0;
};

/// Classifies a field on the central window (fraction `window` of each axis).
inline StationaryResult classify_stationary(const Field& f, double theta, double window = 0.5, double tol = 1e-3) {
  StationaryResult r;
  r.t_end = f.t;
  const Grid& g = f.grid;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const Vec x = g.point(i);
    bool central = true;
    for (int a = 0; a < g.dim; ++a) {
      const double mid = g.lower[a] + 0.5 * g.length[a];
      central = central && std::abs(x[a] - mid) <= 0.5 * window * g.length[a];
    }
    if (!central) continue;
    r.dist_to_zero = std::max(r.dist_to_zero, std::abs(f.values[i]));
    r.dist_to_theta = std::max(r.dist_to_theta, std::abs(f.values[i] - theta));
  }
  if (r.dist_to_theta <= tol * theta) r.classification = StationaryClass::converged_to_theta;
  else if (r.dist_to_zero <= tol * theta) r.classification = StationaryClass::converged_to_0;
  return r;
}

/// Runs cfg to t_end and classifies the final state.
inline StationaryResult stationary_relaxation_check(const SimConfig& cfg, double window = 0.5) {
  Solver s(cfg);
  Field last;
  s.run([&](const Field& f) {
    if (std::abs(f.t - cfg.t_end) <= 1e-9 * (1 + cfg.t_end)) last = f;
  });
  return classify_stationary(last, cfg.params.theta(), window);
}

}  // namespace nkpp
