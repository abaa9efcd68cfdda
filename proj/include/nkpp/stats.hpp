#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "nkpp/errors.hpp"

namespace nkpp::stats {

/// Ordinary least squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
  double slope_ci95 = std::numeric_limits<double>::quiet_NaN();  ///< half-width of the 95% interval
  double r2 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> residuals;
  std::size_t n = 0;
  bool ok = false;
};

inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("ols: size mismatch");
  LinearFit f;
  f.n = x.size();
  if (f.n < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= f.n;
  my /= f.n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.residuals.push_back(r);
    ssr += r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  if (f.n > 2) {
    f.slope_stderr = std::sqrt(ssr / (f.n - 2) / sxx);
    const boost::math::students_t dist(static_cast<double>(f.n - 2));
    f.slope_ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * f.slope_stderr;
  } else {
    f.slope_stderr = 0;
    f.slope_ci95 = 0;
  }
  f.ok = true;
  return f;
}

}  // namespace nkpp::stats
