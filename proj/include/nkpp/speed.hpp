#pragma once

// Minimal traveling-wave speed c_*(xi) = min_{lambda>0} (kappa+ A_xi(lambda) - m) / lambda,
// its minimizer lambda_*(xi), and the front set T_* = {x : x.xi <= c_*(xi) for all xi}.

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/extended.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/model.hpp"
#include "nkpp/polytope.hpp"
#include "nkpp/vec.hpp"

namespace nkpp {

struct SpeedResult {
  Direction xi;
  Extended c_star = Extended::infinity();
  std::optional<double> lambda_star;
  Extended sigma = Extended::infinity();  ///< abscissa of a+ along xi
  double m_xi = 0.0;
  bool boundary_minimum = false;  ///< minimizer at lambda = sigma_xi
  bool dense_fallback = false;    ///< bracket was not unimodal; a dense scan was used
  std::vector<std::pair<double, double>> objective_curve;

  bool finite() const { return c_star.is_finite(); }
};

struct SpeedOptions {
  double lambda_tol = 1e-10;  ///< relative width of the final lambda bracket
  bool record_curve = false;
  int curve_points = 200;
  int unimodality_probes = 64;
};

/// p(xi, lambda) = kappa+ A_xi(lambda) - m.
inline double linear_growth_rate(const KernelSpec& k, const ModelParams& p, const Direction& xi, double lambda) {
  if (!(lambda >= 0)) throw DomainError("linear_growth_rate: lambda must be nonnegative");
  const Extended A = mgf_directional(k, xi, lambda);
  if (A.is_infinite()) throw DomainError("linear_growth_rate: lambda must be below the abscissa");
  return p.kappa_plus * A.value() - p.m;
}

namespace detail {

struct SpeedObjective {
  const KernelSpec& k;
  const ModelParams& p;
  const Direction& xi;

  double operator()(double lambda) const {
    const Extended A = mgf_directional(k, xi, lambda);
    if (A.is_infinite()) return std::numeric_limits<double>::infinity();
    return (p.kappa_plus * A.value() - p.m) / lambda;
  }
  /// lambda^2 g'(lambda) = lambda kappa+ A'(lambda) - (kappa+ A(lambda) - m); increasing in lambda.
  double first_order(double lambda) const {
    const Extended A = mgf_directional(k, xi, lambda);
    return lambda * p.kappa_plus * mgf_derivative(k, xi, lambda) - (p.kappa_plus * A.value() - p.m);
  }
};

/// Golden-section search on [a, c] containing a minimum of g.
template <class G>
std::pair<double, double> golden_section(const G& g, double a, double c, double rel_tol) {
  constexpr double r = 0.6180339887498949;
  double x1 = c - r * (c - a), x2 = a + r * (c - a);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 400 && (c - a) > rel_tol * (1.0 + std::abs(x1)); ++it) {
    if (f1 <= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - r * (c - a);
      f1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (c - a);
      f2 = g(x2);
    }
  }
  return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace detail

/// Computes c_*(xi) and lambda_*(xi). Returns c_star = +inf when sigma_xi = 0.
inline SpeedResult minimal_speed(const KernelSpec& k, const ModelParams& p, const Direction& xi,
                                 const SpeedOptions& opt = {}) {
  if (!p.satisfies_a1()) throw AssumptionError("minimal_speed: (A1) requires kappa_plus > m");
  SpeedResult res;
  res.xi = xi;
  res.sigma = abscissa(k, xi);
  if (first_moment_finite(k)) res.m_xi = first_moment_directional(k, p, xi);
  if (!(Extended(0.0) < res.sigma)) return res;  // heavy tail: infinite speed

  const detail::SpeedObjective g{k, p, xi};
  const double sig = res.sigma.value();
  const bool finite_sigma = res.sigma.is_finite();

  // Bracket a < b < c with g(b) <= g(a), g(b) <= g(c), by geometric expansion.
  double b = finite_sigma ? std::min(1.0, 0.5 * sig) : 1.0;
  double gb = g(b);
  auto up = [&](double x) { return finite_sigma ? std::min(2.0 * x, 0.5 * (x + sig)) : 2.0 * x; };
  double c = up(b), gc = g(c);
  double a = 0.0;
  bool at_boundary = false;
  if (gc < gb) {
    a = b;
    while (gc < gb) {
      a = b;
      b = c;
      gb = gc;
      c = up(b);
      if (finite_sigma && sig - c <= 1e-13 * sig) {
        at_boundary = true;
        break;
      }
      if (!finite_sigma && c > 1e12) throw NumericalError("minimal_speed: objective keeps decreasing");
      gc = g(c);
    }
  } else {
    a = 0.5 * b;
    double ga = g(a);
    while (ga < gb) {
      c = b;
      gc = gb;
      b = a;
      gb = ga;
      a = 0.5 * b;
      if (a < 1e-300) throw NumericalError("minimal_speed: objective keeps decreasing toward 0");
      ga = g(a);
    }
  }

  if (at_boundary) {
    // Infimum approached as lambda increases to sigma_xi.
    res.boundary_minimum = true;
    res.lambda_star = sig;
    double prev = gb;
    for (int j = 1; j <= 40; ++j) {
      const double x = sig * (1.0 - std::ldexp(1.0, -j - 20));
      const double gx = g(x);
      if (!std::isfinite(gx)) break;
      prev = std::min(prev, gx);
    }
    res.c_star = prev;
  } else {
    auto [lam, val] = detail::golden_section(g, a, c, 1e-9);
    // Polish on the first-order condition, which is monotone in lambda.
    double lo = a, hi = c;
    if (g.first_order(lo) < 0 && g.first_order(hi) > 0) {
      for (int it = 0; it < 200 && hi - lo > opt.lambda_tol * (1.0 + lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        (g.first_order(mid) < 0 ? lo : hi) = mid;
      }
      const double cand = 0.5 * (lo + hi);
      const double gv = g(cand);
      if (gv <= val * (1.0 + 1e-14)) {
        lam = cand;
        val = gv;
      }
    }

    // Unimodality probe: no sample may undercut the located minimum.
    const double lo_probe = lam * 1e-2;
    const double hi_probe = finite_sigma ? sig : lam * 1e2;
    double best_l = lam, best_v = val;
    for (int i = 0; i < opt.unimodality_probes; ++i) {
      const double t = (i + 0.5) / opt.unimodality_probes;
      const double x = lo_probe + t * (hi_probe - lo_probe);
      const double v = g(x);
      if (v < best_v * (1.0 - 1e-12)) {
        best_v = v;
        best_l = x;
      }
    }
    if (best_l != lam) {
      std::fprintf(stderr, "warning: minimal_speed: objective not unimodal for %s; using dense scan\n",
                   k.describe().c_str());
      res.dense_fallback = true;
      const int n = 20000;
      for (int i = 1; i < n; ++i) {
        const double x = lo_probe + (hi_probe - lo_probe) * i / n;
        const double v = g(x);
        if (v < best_v) {
          best_v = v;
          best_l = x;
        }
      }
      const double h = (hi_probe - lo_probe) / n;
      auto [l2, v2] = detail::golden_section(g, std::max(best_l - h, 0.5 * best_l),
                                             finite_sigma ? std::min(best_l + h, sig) : best_l + h, opt.lambda_tol);
      if (v2 <= best_v) {
        best_l = l2;
        best_v = v2;
      }
      lam = best_l;
      val = best_v;
    }
    res.lambda_star = lam;
    res.c_star = val;
  }

  if (opt.record_curve) {
    const double lmax = finite_sigma ? sig : 4.0 * *res.lambda_star;
    for (int i = 1; i <= opt.curve_points; ++i) {
      const double x = lmax * i / (opt.curve_points + 1.0);
      res.objective_curve.emplace_back(x, g(x));
    }
  }
  return res;
}

/// minimal_speed for each direction.
inline std::vector<SpeedResult> minimal_speeds(const KernelSpec& k, const ModelParams& p,
                                               const std::vector<Direction>& dirs, const SpeedOptions& opt = {}) {
  std::vector<SpeedResult> out;
  out.reserve(dirs.size());
  for (const auto& xi : dirs) out.push_back(minimal_speed(k, p, xi, opt));
  return out;
}

/// Polytope from precomputed speeds; verifies that m lies strictly inside
/// whenever all offsets are finite.
inline FrontPolytope front_set_from_speeds(const KernelSpec& k,
                                           const std::vector<SpeedResult>& speeds) {
  std::vector<Direction> dirs;
  std::vector<Extended> offsets;
  bool all_finite = true;
  for (const auto& s : speeds) {
    dirs.push_back(s.xi);
    offsets.push_back(s.c_star);
    all_finite = all_finite && s.finite();
  }
  if (all_finite && first_moment_finite(k)) {
    for (const auto& s : speeds) {
      if (!(s.c_star.value() > s.m_xi)) throw InternalError("front_set: first moment m is not interior");
    }
  }
  return make_polytope(dirs, offsets);
}

/// T_* approximated by the given directions.
inline FrontPolytope front_set(const KernelSpec& k, const ModelParams& p, const std::vector<Direction>& dirs) {
  if (dirs.empty()) throw DomainError("front_set: need at least one direction");
  return front_set_from_speeds(k, minimal_speeds(k, p, dirs));
}

/// Discretization error of T_* in 2D: Hausdorff distance between the
/// polygons built from n and 2n equally spaced directions.
inline double direction_resolution_error(const KernelSpec& k, const ModelParams& p, int n) {
  const auto P1 = front_set(k, p, default_directions(2, n));
  const auto P2 = front_set(k, p, default_directions(2, 2 * n));
  if (!P1.bounded || !P2.bounded) return std::numeric_limits<double>::infinity();
  return geom::hausdorff_closed_polylines(P1.vertices, P2.vertices);
}

}  // namespace nkpp
