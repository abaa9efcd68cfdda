#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature with tail truncation for integrals
// over the real line.

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include "nkpp/errors.hpp"

namespace nkpp::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kXgk[1], kXgk[3], kXgk[5], kXgk[7].
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

template <class F>
Piece gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Adaptive integration over a partition `knots` (sorted, at least two entries).
/// Stops when the summed error estimate is below max(abs_tol, rel_tol * |value|).
template <class F>
Result integrate_partition(F&& f, std::span<const double> knots, double rel_tol, double abs_tol = 0.0,
                           int max_intervals = 4000) {
  Result r;
  std::priority_queue<detail::Piece> heap;
  double total = 0, err = 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i + 1] > knots[i])) continue;
    auto p = detail::gk15(f, knots[i], knots[i + 1]);
    r.evaluations += 15;
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  while (!heap.empty() && err > std::max(abs_tol, rel_tol * std::abs(total)) &&
         static_cast<int>(heap.size()) < max_intervals) {
    auto p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) {  // interval at floating-point resolution
      heap.push({p.a, p.b, p.value, 0.0});
      err -= p.error;
      continue;
    }
    auto l = detail::gk15(f, p.a, mid);
    auto rr = detail::gk15(f, mid, p.b);
    r.evaluations += 30;
    total += l.value + rr.value - p.value;
    err += l.error + rr.error - p.error;
    heap.push(l);
    heap.push(rr);
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  total = 0;
  err = 0;
  r.intervals = static_cast<int>(heap.size());
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  r.value = total;
  r.error = err;
  r.converged = err <= std::max(abs_tol, rel_tol * std::abs(total)) * 1.0000001;
  if (!std::isfinite(total)) r.converged = false;
  return r;
}

template <class F>
Result integrate(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0, int max_intervals = 4000) {
  const double knots[2] = {a, b};
  return integrate_partition(f, std::span<const double>(knots, 2), rel_tol, abs_tol, max_intervals);
}

/// Relative height below which an integrand tail is considered negligible.
inline constexpr double kTailCutoff = 1e-16;

/// Integral over R of an integrand concentrated near `center` with length
/// scale `scale`. The range is truncated on each side at the first point of a
/// geometric march where |f| drops below kTailCutoff times the largest value
/// seen so far. `breakpoints` mark kinks or jumps of f.
template <class F>
Result integrate_line(F&& f, double center, double scale, std::span<const double> breakpoints, double rel_tol,
                      double abs_tol = 0.0) {
  if (!(scale > 0) || !std::isfinite(center)) throw NumericalError("integrate_line: invalid center/scale");
  std::vector<double> knots{center};
  double peak = std::abs(f(center));
  for (int k = 1; k <= 8; ++k) {
    peak = std::max({peak, std::abs(f(center + 0.25 * k * scale)), std::abs(f(center - 0.25 * k * scale))});
  }
  for (double b : breakpoints) {
    if (std::isfinite(b)) {
      peak = std::max({peak, std::abs(f(b)), std::abs(f(std::nextafter(b, b + 1))),
                       std::abs(f(std::nextafter(b, b - 1)))});
    }
  }
  auto march = [&](double sign) {
    double prev = std::abs(f(center));
    for (int k = 0; k < 64; ++k) {
      const double x = center + sign * scale * std::ldexp(1.0, k);
      const double v = std::abs(f(x));
      peak = std::max(peak, v);
      knots.push_back(x);
      bool beyond_breaks = true;
      for (double b : breakpoints) {
        if (std::isfinite(b) && sign * (b - x) > 0) beyond_breaks = false;
      }
      if (beyond_breaks && k >= 1 && v <= kTailCutoff * peak && v <= prev) return;
      prev = v;
    }
    std::ostringstream os;
    os << "integrate_line: integrand does not decay (center=" << center << ", scale=" << scale << ", peak=" << peak
       << ")";
    throw NumericalError(os.str());
  };
  march(+1.0);
  march(-1.0);
  const double lo = *std::min_element(knots.begin(), knots.end());
  const double hi = *std::max_element(knots.begin(), knots.end());
  for (double b : breakpoints) {
    if (std::isfinite(b) && b > lo && b < hi) knots.push_back(b);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return integrate_partition(f, knots, rel_tol, abs_tol);
}

/// Like integrate(), but throws NumericalError with diagnostics when the
/// tolerance is not met.
template <class F>
double integrate_or_throw(F&& f, double a, double b, double rel_tol, double abs_tol, const char* what) {
  auto r = integrate(f, a, b, rel_tol, abs_tol);
  if (!r.converged) {
    std::ostringstream os;
    os << what << ": quadrature did not converge on [" << a << ", " << b << "] value=" << r.value
       << " err=" << r.error << " evals=" << r.evaluations;
    throw NumericalError(os.str());
  }
  return r.value;
}

}  // namespace nkpp::quad
