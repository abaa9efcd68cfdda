#pragma once

// Dispersal / competition kernels a+ and a-: evaluation, directional
// moment-generating functions, moments, 1D marginals and the standing
// assumption checks (A1)-(A6).

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/extended.hpp"
#include "nkpp/model.hpp"
#include "nkpp/quadrature.hpp"
#include "nkpp/vec.hpp"

namespace nkpp {

enum class Family { gaussian, laplace, uniform_ball, anisotropic_gaussian, shifted_gaussian, pareto_tail, tabulated };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::laplace: return "laplace";
    case Family::uniform_ball: return "uniform_ball";
    case Family::anisotropic_gaussian: return "anisotropic_gaussian";
    case Family::shifted_gaussian: return "shifted_gaussian";
    case Family::pareto_tail: return "pareto_tail";
    case Family::tabulated: return "tabulated";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view s) {
  for (auto f : {Family::gaussian, Family::laplace, Family::uniform_ball, Family::anisotropic_gaussian,
                 Family::shifted_gaussian, Family::pareto_tail, Family::tabulated}) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("unknown kernel family '" + std::string(s) + "'");
}

/// Samples of a tabulated density on a uniform node lattice covering the
/// support box. Layout is [nx][ny] with x slowest; ny = 1 in 1D.
struct KernelTable {
  int dim = 1;
  std::array<double, 2> lo{0, 0};
  std::array<double, 2> hi{0, 0};
  std::array<int, 2> n{1, 1};
  std::vector<double> values;

  double spacing(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
  double at(int i, int j = 0) const { return values[static_cast<std::size_t>(i) * n[1] + j]; }

  /// Integral of the multilinear interpolant (tensor trapezoid rule).
  double mass() const {
    double total = 0;
    for (int i = 0; i < n[0]; ++i) {
      const double wi = (i == 0 || i == n[0] - 1) ? 0.5 : 1.0;
      if (dim == 1) {
        total += wi * at(i);
        continue;
      }
      for (int j = 0; j < n[1]; ++j) {
        const double wj = (j == 0 || j == n[1] - 1) ? 0.5 : 1.0;
        total += wi * wj * at(i, j);
      }
    }
    total *= spacing(0);
    if (dim == 2) total *= spacing(1);
    return total;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("tabulated kernel: dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
      if (n[a] < 2) throw ConfigError("tabulated kernel: need at least 2 nodes per axis");
      if (!(hi[a] > lo[a])) throw ConfigError("tabulated kernel: empty support box");
    }
    const std::size_t expect = static_cast<std::size_t>(n[0]) * (dim == 2 ? n[1] : 1);
    if (values.size() != expect) throw ConfigError("tabulated kernel: sample count does not match header");
    for (double v : values) {
      if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("tabulated kernel: samples must be finite and >= 0");
    }
  }
};

/// Parametric description of a probability density on R^d.
class KernelSpec {
 public:
  KernelSpec() = default;

  static KernelSpec gaussian(double sigma, int dim = 1) {
    KernelSpec k(Family::gaussian, dim);
    k.sigma_ = sigma;
    k.finalize();
    return k;
  }
  /// Product Laplace density prod_i (rate/2) exp(-rate |x_i|).
  static KernelSpec laplace(double rate, int dim = 1) {
    KernelSpec k(Family::laplace, dim);
    k.rate_ = rate;
    k.finalize();
    return k;
  }
  static KernelSpec uniform_ball(double radius, int dim = 1) {
    KernelSpec k(Family::uniform_ball, dim);
    k.radius_ = radius;
    k.finalize();
    return k;
  }
  /// Centered Gaussian with a full covariance matrix (row-major dim x dim).
  static KernelSpec anisotropic_gaussian(std::vector<double> covariance, int dim) {
    KernelSpec k(Family::anisotropic_gaussian, dim);
    k.cov_ = std::move(covariance);
    k.finalize();
    return k;
  }
  /// 2D Gaussian with standard deviations (sx, sy) along axes rotated by `angle`.
  static KernelSpec anisotropic_gaussian_2d(double sx, double sy, double angle = 0.0) {
    if (!(sx > 0) || !(sy > 0)) throw ConfigError("anisotropic_gaussian: standard deviations must be positive");
    const double c = std::cos(angle), s = std::sin(angle);
    const double a = sx * sx, b = sy * sy;
    return anisotropic_gaussian({c * c * a + s * s * b, c * s * (a - b), c * s * (a - b), s * s * a + c * c * b}, 2);
  }
  static KernelSpec shifted_gaussian(const Vec& mean, double sigma) {
    KernelSpec k(Family::shifted_gaussian, mean.dim());
    k.mean_ = mean;
    k.sigma_ = sigma;
    k.finalize();
    return k;
  }
  /// Radial density proportional to (1 + |x|/scale)^-(d + alpha).
  static KernelSpec pareto_tail(double alpha, double scale = 1.0, int dim = 1) {
    KernelSpec k(Family::pareto_tail, dim);
    k.alpha_ = alpha;
    k.tail_scale_ = scale;
    k.finalize();
    return k;
  }
  /// Tabulated density; samples are rescaled so the interpolant has unit mass.
  static KernelSpec tabulated(KernelTable table) {
    table.validate();
    const double mass = table.mass();
    if (!(mass > 0)) throw ConfigError("tabulated kernel: samples have zero mass");
    for (double& v : table.values) v /= mass;
    KernelSpec k(Family::tabulated, table.dim);
    k.table_ = std::make_shared<const KernelTable>(std::move(table));
    k.finalize();
    return k;
  }

  Family family() const { return family_; }
  int dim() const { return dim_; }
  double sigma() const { return sigma_; }
  double rate() const { return rate_; }
  double radius() const { return radius_; }
  double tail_exponent() const { return alpha_; }
  double tail_scale() const { return tail_scale_; }
  const Vec& mean() const { return mean_; }
  const std::vector<double>& covariance() const { return cov_; }
  const KernelTable& table() const { return *table_; }
  bool symmetric() const {
    return family_ != Family::shifted_gaussian && family_ != Family::tabulated;
  }

  /// Location around which the mass is concentrated.
  Vec center() const {
    if (family_ == Family::shifted_gaussian) return mean_;
    if (family_ == Family::tabulated) {
      Vec c(dim_);
      for (int a = 0; a < dim_; ++a) c[a] = 0.5 * (table_->lo[a] + table_->hi[a]);
      return c;
    }
    return Vec(dim_);
  }

  /// Characteristic length of the kernel.
  double scale() const {
    switch (family_) {
      case Family::gaussian:
      case Family::shifted_gaussian: return sigma_;
      case Family::laplace: return 1.0 / rate_;
      case Family::uniform_ball: return radius_;
      case Family::anisotropic_gaussian: {
        double tr = 0;
        for (int i = 0; i < dim_; ++i) tr = std::max(tr, cov_[i * dim_ + i]);
        return std::sqrt(tr);
      }
      case Family::pareto_tail: return tail_scale_;
      case Family::tabulated: {
        double w = 0;
        for (int a = 0; a < dim_; ++a) w = std::max(w, 0.25 * (table_->hi[a] - table_->lo[a]));
        return w;
      }
    }
    return 1.0;
  }

  /// Radius about the origin outside of which at most ~eps of the mass lies.
  /// Heavy tails give very large radii; callers cap as needed.
  double mass_radius(double eps = 1e-12) const {
    const double d = dim_;
    switch (family_) {
      case Family::gaussian: return sigma_ * std::sqrt(2.0 * std::log(1.0 / eps) + 2.0 * d);
      case Family::anisotropic_gaussian: return scale() * std::sqrt(2.0 * std::log(1.0 / eps) + 2.0 * d);
      case Family::shifted_gaussian: return mean_.norm() + sigma_ * std::sqrt(2.0 * std::log(1.0 / eps) + 2.0 * d);
      case Family::laplace: return std::log(d / eps) / rate_;
      case Family::uniform_ball: return radius_;
      case Family::pareto_tail: return tail_scale_ * (std::pow(eps, -1.0 / alpha_) - 1.0);
      case Family::tabulated: {
        double r2 = 0;
        for (int a = 0; a < dim_; ++a) {
          const double e = std::max(std::abs(table_->lo[a]), std::abs(table_->hi[a]));
          r2 += e * e;
        }
        return std::sqrt(r2);
      }
    }
    return 0.0;
  }

  bool compact_support() const { return family_ == Family::uniform_ball || family_ == Family::tabulated; }

  /// Density value a(x).
  double operator()(std::span<const double> x) const {
    switch (family_) {
      case Family::gaussian: {
        double r2 = 0;
        for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
        return norm_ * std::exp(-0.5 * r2 / (sigma_ * sigma_));
      }
      case Family::shifted_gaussian: {
        double r2 = 0;
        for (int i = 0; i < dim_; ++i) r2 += (x[i] - mean_[i]) * (x[i] - mean_[i]);
        return norm_ * std::exp(-0.5 * r2 / (sigma_ * sigma_));
      }
      case Family::laplace: {
        double l1 = 0;
        for (int i = 0; i < dim_; ++i) l1 += std::abs(x[i]);
        return norm_ * std::exp(-rate_ * l1);
      }
      case Family::uniform_ball: {
        double r2 = 0;
        for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
        return r2 <= radius_ * radius_ ? norm_ : 0.0;
      }
      case Family::anisotropic_gaussian: {
        // |L^{-1} x|^2 with Sigma = L L^T.
        std::array<double, kMaxDim> y{};
        double q = 0;
        for (int i = 0; i < dim_; ++i) {
          double s = x[i];
          for (int j = 0; j < i; ++j) s -= chol_[i * dim_ + j] * y[j];
          y[i] = s / chol_[i * dim_ + i];
          q += y[i] * y[i];
        }
        return norm_ * std::exp(-0.5 * q);
      }
      case Family::pareto_tail: {
        double r2 = 0;
        for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
        return norm_ * std::pow(1.0 + std::sqrt(r2) / tail_scale_, -(dim_ + alpha_));
      }
      case Family::tabulated: return interpolate(x);
    }
    return 0.0;
  }
  double operator()(const Vec& x) const { return (*this)(x.span()); }

  /// log a(x), -inf outside the support; exact in the far tails where a(x) underflows.
  double log_density(std::span<const double> x) const {
    switch (family_) {
      case Family::gaussian:
      case Family::shifted_gaussian: {
        double r2 = 0;
        for (int i = 0; i < dim_; ++i) {
          const double c = family_ == Family::gaussian ? 0.0 : mean_[i];
          r2 += (x[i] - c) * (x[i] - c);
        }
        return std::log(norm_) - 0.5 * r2 / (sigma_ * sigma_);
      }
      case Family::laplace: {
        double l1 = 0;
        for (int i = 0; i < dim_; ++i) l1 += std::abs(x[i]);
        return std::log(norm_) - rate_ * l1;
      }
      case Family::pareto_tail: {
        double r2 = 0;
        for (int i = 0; i < dim_; ++i) r2 += x[i] * x[i];
        return std::log(norm_) - (dim_ + alpha_) * std::log1p(std::sqrt(r2) / tail_scale_);
      }
      default: return std::log((*this)(x));
    }
  }
  double log_density(const Vec& x) const { return log_density(x.span()); }

  /// Parameters t at which t -> a(p + t v) has kinks or jumps (|v| = 1).
  std::vector<double> line_breakpoints(const Vec& p, const Vec& v) const {
    std::vector<double> out;
    switch (family_) {
      case Family::laplace:
        for (int i = 0; i < dim_; ++i) {
          if (std::abs(v[i]) > 1e-14) out.push_back(-p[i] / v[i]);
        }
        break;
      case Family::uniform_ball: {
        const double b = p.dot(v), c = p.dot(p) - radius_ * radius_;
        const double disc = b * b - c;
        if (disc >= 0) {
          out.push_back(-b - std::sqrt(disc));
          out.push_back(-b + std::sqrt(disc));
        }
        break;
      }
      case Family::pareto_tail: out.push_back(-p.dot(v)); break;
      case Family::tabulated:
        for (int a = 0; a < dim_; ++a) {
          if (std::abs(v[a]) < 1e-14) continue;
          const double h = table_->spacing(a);
          for (int i = 0; i < table_->n[a]; ++i) out.push_back((table_->lo[a] + i * h - p[a]) / v[a]);
        }
        break;
      default: break;
    }
    return out;
  }

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    return a.family_ == b.family_ && a.dim_ == b.dim_ && a.sigma_ == b.sigma_ && a.rate_ == b.rate_ &&
           a.radius_ == b.radius_ && a.alpha_ == b.alpha_ && a.tail_scale_ == b.tail_scale_ &&
           a.mean_.to_vector() == b.mean_.to_vector() && a.cov_ == b.cov_ && a.table_ == b.table_;
  }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(family_) << "(d=" << dim_;
    switch (family_) {
      case Family::gaussian: os << ", sigma=" << sigma_; break;
      case Family::laplace: os << ", rate=" << rate_; break;
      case Family::uniform_ball: os << ", radius=" << radius_; break;
      case Family::shifted_gaussian:
        os << ", sigma=" << sigma_ << ", mean=(";
        for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << mean_[i];
        os << ")";
        break;
      case Family::anisotropic_gaussian:
        os << ", cov=[";
        for (std::size_t i = 0; i < cov_.size(); ++i) os << (i ? "," : "") << cov_[i];
        os << "]";
        break;
      case Family::pareto_tail: os << ", alpha=" << alpha_ << ", scale=" << tail_scale_; break;
      case Family::tabulated: os << ", nodes=" << table_->values.size(); break;
    }
    os << ")";
    return os.str();
  }

 private:
  KernelSpec(Family f, int dim) : family_(f), dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("kernel dimension out of range");
  }

  void finalize() {
    const double d = dim_;
    switch (family_) {
      case Family::gaussian:
      case Family::shifted_gaussian:
        if (!(sigma_ > 0) || !std::isfinite(sigma_)) throw ConfigError("gaussian kernel: sigma must be positive");
        norm_ = std::pow(2.0 * std::numbers::pi * sigma_ * sigma_, -0.5 * d);
        break;
      case Family::laplace:
        if (!(rate_ > 0) || !std::isfinite(rate_)) throw ConfigError("laplace kernel: rate must be positive");
        norm_ = std::pow(0.5 * rate_, d);
        break;
      case Family::uniform_ball:
        if (!(radius_ > 0) || !std::isfinite(radius_)) throw ConfigError("uniform_ball kernel: radius must be positive");
        norm_ = std::tgamma(0.5 * d + 1.0) / (std::pow(std::numbers::pi, 0.5 * d) * std::pow(radius_, d));
        break;
      case Family::anisotropic_gaussian: {
        if (cov_.size() != static_cast<std::size_t>(dim_ * dim_))
          throw ConfigError("anisotropic_gaussian: covariance must have dim*dim entries");
        chol_.assign(cov_.size(), 0.0);
        double logdet = 0;
        for (int i = 0; i < dim_; ++i) {
          for (int j = 0; j < dim_; ++j) {
            if (std::abs(cov_[i * dim_ + j] - cov_[j * dim_ + i]) > 1e-12 * (1 + std::abs(cov_[i * dim_ + j])))
              throw ConfigError("anisotropic_gaussian: covariance must be symmetric");
          }
          for (int j = 0; j <= i; ++j) {
            double s = cov_[i * dim_ + j];
            for (int k = 0; k < j; ++k) s -= chol_[i * dim_ + k] * chol_[j * dim_ + k];
            if (i == j) {
              if (!(s > 0)) throw ConfigError("anisotropic_gaussian: covariance must be positive definite");
              chol_[i * dim_ + i] = std::sqrt(s);
              logdet += 2.0 * std::log(chol_[i * dim_ + i]);
            } else {
              chol_[i * dim_ + j] = s / chol_[j * dim_ + j];
            }
          }
        }
        norm_ = std::exp(-0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet));
        break;
      }
      case Family::pareto_tail: {
        if (!(alpha_ > 0) || !(tail_scale_ > 0)) throw ConfigError("pareto_tail kernel: alpha and scale must be positive");
        // Total mass of (1+r/s)^-(d+alpha) is s^d |S^{d-1}| B(d, alpha).
        const double surface = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
        const double beta_fn = std::exp(std::lgamma(d) + std::lgamma(alpha_) - std::lgamma(d + alpha_));
        norm_ = 1.0 / (std::pow(tail_scale_, d) * surface * beta_fn);
        break;
      }
      case Family::tabulated: break;
    }
  }

  double interpolate(std::span<const double> x) const {
    const auto& t = *table_;
    std::array<int, 2> idx{0, 0};
    std::array<double, 2> frac{0, 0};
    for (int a = 0; a < t.dim; ++a) {
      if (x[a] < t.lo[a] || x[a] > t.hi[a]) return 0.0;
      const double u = (x[a] - t.lo[a]) / t.spacing(a);
      int i = static_cast<int>(std::floor(u));
      i = std::clamp(i, 0, t.n[a] - 2);
      idx[a] = i;
      frac[a] = u - i;
    }
    if (t.dim == 1) return (1 - frac[0]) * t.at(idx[0]) + frac[0] * t.at(idx[0] + 1);
    const double f00 = t.at(idx[0], idx[1]), f01 = t.at(idx[0], idx[1] + 1);
    const double f10 = t.at(idx[0] + 1, idx[1]), f11 = t.at(idx[0] + 1, idx[1] + 1);
    return (1 - frac[0]) * ((1 - frac[1]) * f00 + frac[1] * f01) + frac[0] * ((1 - frac[1]) * f10 + frac[1] * f11);
  }

  Family family_ = Family::gaussian;
  int dim_ = 1;
  double sigma_ = 1.0;
  double rate_ = 1.0;
  double radius_ = 1.0;
  double alpha_ = 2.0;
  double tail_scale_ = 1.0;
  Vec mean_;
  std::vector<double> cov_;
  std::vector<double> chol_;
  std::shared_ptr<const KernelTable> table_;
  double norm_ = 1.0;
};

/// Pointwise density a(x).
inline double evaluate(const KernelSpec& k, const Vec& x) {
  if (x.dim() != k.dim()) throw DomainError("evaluate: point dimension does not match kernel");
  for (int i = 0; i < x.dim(); ++i) {
    if (!std::isfinite(x[i])) throw DomainError("evaluate: point must be finite");
  }
  return k(x);
}

namespace detail {

inline void check_direction(const KernelSpec& k, const Direction& xi) {
  if (xi.dim() != k.dim()) throw DomainError("direction dimension does not match kernel");
}

inline Vec perpendicular_2d(const Direction& xi) { return Vec{-xi[1], xi[0]}; }

/// Breakpoints of the marginal s -> int a(s xi + eta xi_perp) d eta.
inline std::vector<double> marginal_breakpoints(const KernelSpec& k, const Direction& xi) {
  switch (k.family()) {
    case Family::laplace:
    case Family::pareto_tail: return {0.0};
    case Family::uniform_ball: return {-k.radius(), k.radius()};
    case Family::tabulated: {
      const auto& t = k.table();
      std::vector<double> out;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int cx = 0; cx < 2; ++cx) {
        for (int cy = 0; cy < (t.dim == 2 ? 2 : 1); ++cy) {
          double s = (cx ? t.hi[0] : t.lo[0]) * xi[0];
          if (t.dim == 2) s += (cy ? t.hi[1] : t.lo[1]) * xi[1];
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
      }
      if (t.dim == 1) {
        for (int i = 0; i < t.n[0]; ++i) out.push_back((t.lo[0] + i * t.spacing(0)) * xi[0]);
      }
      out.push_back(lo);
      out.push_back(hi);
      return out;
    }
    default: return {};
  }
}

}  // namespace detail

/// Marginal density along xi at s: int over {xi}^perp of a(s xi + eta) d eta,
/// by quadrature (d = 1: a(s xi)).
inline double marginal_density(const KernelSpec& k, const Direction& xi, double s, double rel_tol = 1e-12) {
  detail::check_direction(k, xi);
  if (k.dim() == 1) return k(Vec{s * xi[0]});
  if (k.dim() != 2) throw NumericalError("marginal_density: quadrature is implemented for d <= 2 only");
  const Vec base = s * xi.vec();
  const Vec perp = detail::perpendicular_2d(xi);
  auto f = [&](double eta) {
    const Vec x = base + eta * perp;
    return k(x);
  };
  const auto breaks = k.line_breakpoints(base, perp);
  if (k.compact_support()) {
    // Integrate only where the line meets the support.
    double lo, hi;
    if (k.family() == Family::uniform_ball) {
      if (breaks.size() < 2) return 0.0;
      lo = breaks[0];
      hi = breaks[1];
      if (!(hi > lo)) return 0.0;
      return k(Vec{0.0, 0.0}) * (hi - lo);
    }
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (double b : breaks) {
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    std::vector<double> knots;
    for (double b : breaks) knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    if (knots.size() < 2) return 0.0;
    auto r = quad::integrate_partition(f, knots, rel_tol, 1e-300);
    return r.value;
  }
  const double center = k.center().dot(perp);
  auto r = quad::integrate_line(f, center, k.scale(), breaks, rel_tol, 1e-300);
  if (!r.converged) throw NumericalError("marginal_density: inner quadrature did not converge");
  return r.value;
}

namespace detail {

/// int g(s) a-marginal(s) ds by nested quadrature. With `log_weight`, g
/// returns log of the weight and the product is formed as exp(g + log a), which
/// avoids inf * 0 for exponential weights close to the abscissa.
template <class G>
quad::Result integrate_against_marginal(const KernelSpec& k, const Direction& xi, G&& g, double rel_tol,
                                        double abs_tol, bool log_weight = false) {
  auto f = [&](double s) {
    if (log_weight && k.dim() == 1) return std::exp(g(s) + k.log_density(Vec{xi[0] * s}));
    const double m = marginal_density(k, xi, s, std::min(1e-12, 0.01 * rel_tol));
    if (m == 0.0) return 0.0;
    return log_weight ? std::exp(g(s) + std::log(m)) : g(s) * m;
  };
  const auto breaks = marginal_breakpoints(k, xi);
  if (k.compact_support()) {
    std::vector<double> knots(breaks);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    knots = {knots.front(), knots.back()};
    for (double b : breaks) knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    return quad::integrate_partition(f, knots, rel_tol, abs_tol);
  }
  const double center = k.center().dot(xi.vec());
  return quad::integrate_line(f, center, k.scale(), breaks, rel_tol, abs_tol);
}

}  // namespace detail

/// Directional abscissa sigma_xi = sup{lambda > 0 : A_xi(lambda) < inf}.
inline Extended abscissa(const KernelSpec& k, const Direction& xi) {
  detail::check_direction(k, xi);
  switch (k.family()) {
    case Family::laplace: {
      double mx = 0;
      for (int i = 0; i < k.dim(); ++i) mx = std::max(mx, std::abs(xi[i]));
      return k.rate() / mx;
    }
    case Family::pareto_tail: return 0.0;
    default: return Extended::infinity();
  }
}

/// A_xi(lambda) = int a(x) exp(lambda x.xi) dx by adaptive quadrature
/// (relative tolerance `rel_tol`); +inf when lambda >= sigma_xi.
inline Extended mgf_quadrature(const KernelSpec& k, const Direction& xi, double lambda, double rel_tol = 1e-10) {
  detail::check_direction(k, xi);
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw DomainError("mgf: lambda must be a finite nonnegative number");
  if (lambda > 0 && abscissa(k, xi) <= Extended(lambda)) return Extended::infinity();
  if (k.dim() > 2) throw NumericalError("mgf_quadrature: only d <= 2 is supported");
  auto r = detail::integrate_against_marginal(k, xi, [lambda](double s) { return lambda * s; }, rel_tol, 0.0, true);
  if (!r.converged) {
    std::ostringstream os;
    os << "mgf_quadrature: no convergence for " << k.describe() << " at lambda=" << lambda << " (value=" << r.value
       << ", err=" << r.error << ", evals=" << r.evaluations << ")";
    throw NumericalError(os.str());
  }
  return r.value;
}

/// Directional moment-generating function A_xi(lambda). Closed form where the
/// family has one, quadrature otherwise; +inf for lambda >= sigma_xi.
inline Extended mgf_directional(const KernelSpec& k, const Direction& xi, double lambda) {
  detail::check_direction(k, xi);
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw DomainError("mgf: lambda must be a finite nonnegative number");
  if (lambda > 0 && abscissa(k, xi) <= Extended(lambda)) return Extended::infinity();
  const int d = k.dim();
  switch (k.family()) {
    case Family::gaussian: return std::exp(0.5 * lambda * lambda * k.sigma() * k.sigma());
    case Family::shifted_gaussian:
      return std::exp(lambda * k.mean().dot(xi.vec()) + 0.5 * lambda * lambda * k.sigma() * k.sigma());
    case Family::anisotropic_gaussian: {
      double q = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q += xi[i] * k.covariance()[i * d + j] * xi[j];
      return std::exp(0.5 * lambda * lambda * q);
    }
    case Family::laplace: {
      double p = 1;
      const double mu2 = k.rate() * k.rate();
      for (int i = 0; i < d; ++i) p *= mu2 / (mu2 - lambda * lambda * xi[i] * xi[i]);
      return p;
    }
    case Family::uniform_ball: {
      const double z = lambda * k.radius();
      const double nu = 0.5 * d;
      if (z < 1e-3) {
        // Series Gamma(nu+1) sum_j (z^2/4)^j / (j! Gamma(nu+j+1)).
        double term = 1, sum = 1;
        for (int j = 1; j < 8; ++j) {
          term *= 0.25 * z * z / (j * (nu + j));
          sum += term;
        }
        return sum;
      }
      if (d == 1) return std::sinh(z) / z;
      return std::tgamma(nu + 1.0) * std::pow(2.0 / z, nu) * std::cyl_bessel_i(nu, z);
    }
    case Family::pareto_tail: return lambda == 0 ? Extended(1.0) : Extended::infinity();
    case Family::tabulated: return mgf_quadrature(k, xi, lambda);
  }
  return Extended::infinity();
}

/// d/dlambda A_xi(lambda) for 0 <= lambda < sigma_xi.
inline double mgf_derivative(const KernelSpec& k, const Direction& xi, double lambda) {
  detail::check_direction(k, xi);
  const Extended A = mgf_directional(k, xi, lambda);
  if (A.is_infinite()) throw DomainError("mgf_derivative: lambda beyond the abscissa");
  const int d = k.dim();
  switch (k.family()) {
    case Family::gaussian: return lambda * k.sigma() * k.sigma() * A.value();
    case Family::shifted_gaussian: return (k.mean().dot(xi.vec()) + lambda * k.sigma() * k.sigma()) * A.value();
    case Family::anisotropic_gaussian: {
      double q = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q += xi[i] * k.covariance()[i * d + j] * xi[j];
      return lambda * q * A.value();
    }
    case Family::laplace: {
      double s = 0;
      const double mu2 = k.rate() * k.rate();
      for (int i = 0; i < d; ++i) s += 2.0 * lambda * xi[i] * xi[i] / (mu2 - lambda * lambda * xi[i] * xi[i]);
      return s * A.value();
    }
    case Family::uniform_ball: {
      // d/dz [z^-nu I_nu(z)] = z^-nu I_{nu+1}(z).
      const double r = k.radius();
      const double z = lambda * r;
      const double nu = 0.5 * d;
      if (z < 1e-3) {
        double term = 0.5 * z / (nu + 1.0), sum = term;
        for (int j = 1; j < 8; ++j) {
          term *= 0.25 * z * z / (j * (nu + 1.0 + j));
          sum += term;
        }
        return r * sum;
      }
      if (d == 1) return r * (z * std::cosh(z) - std::sinh(z)) / (z * z);
      return r * std::tgamma(nu + 1.0) * std::pow(2.0 / z, nu) * std::cyl_bessel_i(nu + 1.0, z);
    }
    case Family::pareto_tail: {
      if (lambda != 0) throw DomainError("mgf_derivative: lambda beyond the abscissa");
      return 0.0;
    }
    case Family::tabulated: {
      auto r = detail::integrate_against_marginal(
          k, xi, [lambda](double s) { return s * std::exp(lambda * s); }, 1e-10, 1e-14 * A.value());
      if (!r.converged) throw NumericalError("mgf_derivative: quadrature did not converge");
      return r.value;
    }
  }
  return 0.0;
}

/// int (x.xi) a(x) dx by quadrature (no kappa_plus factor).
inline double mean_projection_quadrature(const KernelSpec& k, const Direction& xi, double rel_tol = 1e-10) {
  detail::check_direction(k, xi);
  auto r = detail::integrate_against_marginal(k, xi, [](double s) { return s; }, rel_tol, 1e-14 * k.scale());
  if (!r.converged) throw NumericalError("first moment quadrature did not converge for " + k.describe());
  return r.value;
}

/// True when int |x.xi| a(x) dx < inf, i.e. (A4_xi).
inline bool first_moment_finite(const KernelSpec& k) {
  return k.family() != Family::pareto_tail || k.tail_exponent() > 1.0;
}

/// m_xi = kappa_plus int (x.xi) a+(x) dx.
inline double first_moment_directional(const KernelSpec& k, const ModelParams& p, const Direction& xi) {
  detail::check_direction(k, xi);
  if (!first_moment_finite(k)) throw AssumptionError("(A4) fails: first moment of " + k.describe() + " diverges");
  switch (k.family()) {
    case Family::shifted_gaussian: return p.kappa_plus * k.mean().dot(xi.vec());
    case Family::tabulated: return p.kappa_plus * mean_projection_quadrature(k, xi);
    default: return 0.0;  // symmetric families
  }
}

/// Full first moment vector m = kappa_plus int x a+(x) dx.
inline Vec full_first_moment(const KernelSpec& k, const ModelParams& p) {
  Vec out(k.dim());
  for (int i = 0; i < k.dim(); ++i) {
    Vec e(k.dim());
    e[i] = 1.0;
    out[i] = first_moment_directional(k, p, Direction(e));
  }
  return out;
}

/// Reflection x -> -x of a 1D kernel.
inline KernelSpec reflect_1d(const KernelSpec& k) {
  if (k.dim() != 1) throw DomainError("reflect_1d: kernel must be one-dimensional");
  if (k.family() == Family::shifted_gaussian) return KernelSpec::shifted_gaussian(-k.mean(), k.sigma());
  if (k.family() == Family::tabulated) {
    KernelTable t = k.table();
    std::reverse(t.values.begin(), t.values.end());
    t.lo[0] = -k.table().hi[0];
    t.hi[0] = -k.table().lo[0];
    return KernelSpec::tabulated(std::move(t));
  }
  return k;
}

/// 1D marginal of a along xi. Closed form for Gaussian families and for axis
/// directions of the product Laplace kernel; otherwise a tabulated density
/// sampled by quadrature on `nodes` uniform points.
inline KernelSpec marginal_1d(const KernelSpec& k, const Direction& xi, int nodes = 4097,
                              double heavy_tail_radius = 200.0) {
  detail::check_direction(k, xi);
  if (k.dim() == 1) return xi[0] > 0 ? k : reflect_1d(k);
  const int d = k.dim();
  switch (k.family()) {
    case Family::gaussian: return KernelSpec::gaussian(k.sigma(), 1);
    case Family::shifted_gaussian: return KernelSpec::shifted_gaussian(Vec{k.mean().dot(xi.vec())}, k.sigma());
    case Family::anisotropic_gaussian: {
      double q = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q += xi[i] * k.covariance()[i * d + j] * xi[j];
      return KernelSpec::gaussian(std::sqrt(q), 1);
    }
    case Family::laplace:
      for (int i = 0; i < d; ++i) {
        if (std::abs(std::abs(xi[i]) - 1.0) < 1e-15) return KernelSpec::laplace(k.rate(), 1);
      }
      break;
    default: break;
  }
  if (d != 2) throw NumericalError("marginal_1d: tabulated marginals are implemented for d = 2 only");
  double lo, hi;
  if (k.compact_support()) {
    const auto b = detail::marginal_breakpoints(k, xi);
    lo = *std::min_element(b.begin(), b.end());
    hi = *std::max_element(b.begin(), b.end());
  } else {
    const double c = k.center().dot(xi.vec());
    const double r = std::min(k.mass_radius(1e-14), heavy_tail_radius * k.scale());
    lo = c - r;
    hi = c + r;
  }
  KernelTable t;
  t.dim = 1;
  t.lo = {lo, 0};
  t.hi = {hi, 0};
  t.n = {nodes, 1};
  t.values.resize(nodes);
  for (int i = 0; i < nodes; ++i) t.values[i] = marginal_density(k, xi, lo + i * t.spacing(0));
  return KernelSpec::tabulated(std::move(t));
}

/// int a(x) exp(mu |x|) dx by quadrature (d <= 2); +inf when it diverges.
inline Extended radial_exponential_moment(const KernelSpec& k, double mu, double rel_tol = 1e-8) {
  if (k.family() == Family::pareto_tail) return Extended::infinity();
  if (k.family() == Family::laplace && mu >= k.rate()) return Extended::infinity();
  if (k.dim() == 1) {
    return detail::integrate_against_marginal(k, Direction{1.0}, [mu](double s) { return std::exp(mu * std::abs(s)); },
                                              rel_tol, 0.0)
        .value;
  }
  if (k.dim() != 2) throw NumericalError("radial_exponential_moment: d <= 2 only");
  // Polar coordinates: int_0^{2pi} int_0^inf a(r e_phi) e^{mu r} r dr dphi.
  auto radial = [&](double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    auto g = [&](double r) { return k(Vec{r * c, r * s}) * std::exp(mu * r) * r; };
    if (k.compact_support()) {
      return quad::integrate(g, 0.0, k.mass_radius(), 1e-11, 0.0).value;
    }
    const double scale = k.scale();
    std::vector<double> knots{0.0};
    for (int j = 0; j < 60; ++j) {
      const double r = scale * std::ldexp(1.0, j);
      knots.push_back(r);
      if (j > 3 && g(r) < 1e-18 * g(scale)) break;
    }
    return quad::integrate_partition(g, knots, 1e-11, 0.0).value;
  };
  auto r = quad::integrate(radial, 0.0, 2.0 * std::numbers::pi, rel_tol, 0.0);
  if (!r.converged || !std::isfinite(r.value)) return Extended::infinity();
  return r.value;
}

/// Per-direction assumption diagnostics.
struct DirectionalAssumptions {
  Direction xi;
  bool a4_first_moment = false;
  double m_xi = 0.0;  ///< kappa_plus-weighted first moment when finite
  bool a6_exp_integrable = false;
  Extended sigma;  ///< abscissa estimate
};

/// Outcome of checking (A1)-(A6) for a kernel pair and parameter set.
struct AssumptionReport {
  bool a1_beta = false;
  double beta = 0.0;
  bool a2_comparison = false;
  double a2_min_margin = 0.0;  ///< min over the sample grid of kappa+ a+ - kappa_nl theta a-
  bool a3_bounded = false;
  double a3_sup = 0.0;
  bool a5_nondeg = false;
  double a5_rho = 0.0;
  double a5_delta = 0.0;
  double grid_spacing = 0.0;
  std::vector<DirectionalAssumptions> directions;

  bool a4_all() const {
    return std::all_of(directions.begin(), directions.end(), [](auto& d) { return d.a4_first_moment; });
  }
  bool a6_all() const {
    return std::all_of(directions.begin(), directions.end(), [](auto& d) { return d.a6_exp_integrable; });
  }
  /// (A1)-(A5): what the dynamics and front results need.
  bool dynamics_ok() const { return a1_beta && a2_comparison && a3_bounded && a4_all() && a5_nondeg; }
  bool all_hold() const { return dynamics_ok() && a6_all(); }
};

/// Evaluates (A1)-(A6). (A2) and (A3) are checked on a dense lattice covering
/// the bulk of both kernels, (A5) on lattice points of balls B_delta(0) with
/// delta in {1,2,4,8} lattice spacings, (A6) per direction via the abscissa.
inline AssumptionReport check_assumptions(const KernelSpec& plus, const KernelSpec& minus, const ModelParams& p,
                                          std::span<const Direction> directions) {
  if (plus.dim() != minus.dim()) throw ConfigError("kernels a+ and a- must have equal dimension");
  if (directions.empty()) throw DomainError("check_assumptions: need at least one direction");
  AssumptionReport rep;
  rep.beta = p.beta();
  rep.a1_beta = p.satisfies_a1();
  const double theta = p.theta();
  const int d = plus.dim();

  const double reach = std::max({plus.center().norm() + std::min(plus.mass_radius(1e-12), 100.0 * plus.scale()),
                                 minus.center().norm() + std::min(minus.mass_radius(1e-12), 100.0 * minus.scale())});
  const int per_axis = d == 1 ? 4001 : d == 2 ? 401 : 41;
  const double h = 2.0 * reach / (per_axis - 1);
  rep.grid_spacing = h;

  double min_margin = std::numeric_limits<double>::infinity();
  double sup_plus = 0;
  std::array<double, 4> ball_min;
  ball_min.fill(std::numeric_limits<double>::infinity());
  const std::array<double, 4> radii{h, 2 * h, 4 * h, 8 * h};

  std::array<int, kMaxDim> idx{};
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  Vec x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = d - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      x[i] = -reach + idx[i] * h;
    }
    const double ap = plus(x);
    const double margin = p.kappa_plus * ap - p.kappa_nl * theta * minus(x);
    min_margin = std::min(min_margin, margin);
    sup_plus = std::max(sup_plus, ap);
    const double r = x.norm();
    for (int j = 0; j < 4; ++j) {
      if (r <= radii[j] * (1 + 1e-12)) ball_min[j] = std::min(ball_min[j], margin);
    }
  }
  rep.a2_min_margin = min_margin;
  rep.a2_comparison = min_margin >= 0.0;
  rep.a3_sup = sup_plus;
  rep.a3_bounded = std::isfinite(sup_plus);
  for (int j = 3; j >= 0; --j) {
    if (ball_min[j] > 0) {
      rep.a5_nondeg = true;
      rep.a5_rho = ball_min[j];
      rep.a5_delta = radii[j];
      break;
    }
  }

  for (const auto& xi : directions) {
    DirectionalAssumptions da;
    da.xi = xi;
    da.a4_first_moment = first_moment_finite(plus);
    if (da.a4_first_moment) da.m_xi = first_moment_directional(plus, p, xi);
    da.sigma = abscissa(plus, xi);
    da.a6_exp_integrable = Extended(0.0) < da.sigma;
    rep.directions.push_back(da);
  }
  return rep;
}

/// Loads a tabulated kernel. The first line is
///   # support: xmin xmax n            (1D, followed by n "x value" rows)
///   # support: xmin xmax ymin ymax n m (2D, followed by m rows of n values, row j at y_j)
inline KernelSpec load_tabulated_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tabulated kernel file '" + path + "'");
  std::string header;
  std::getline(in, header);
  const auto pos = header.find("support:");
  if (header.rfind('#', 0) != 0 || pos == std::string::npos)
    throw ConfigError(path + ":1: expected header '# support: xmin xmax [ymin ymax] n [m]'");
  std::istringstream hs(header.substr(pos + 8));
  std::vector<double> h;
  for (double v; hs >> v;) h.push_back(v);
  KernelTable t;
  if (h.size() == 3) {
    t.dim = 1;
    t.lo = {h[0], 0};
    t.hi = {h[1], 0};
    t.n = {static_cast<int>(h[2]), 1};
    const double dx = (t.hi[0] - t.lo[0]) / (t.n[0] - 1);
    int line = 1;
    for (std::string row; std::getline(in, row);) {
      ++line;
      if (row.empty() || row[0] == '#') continue;
      std::istringstream rs(row);
      double xv, val;
      if (!(rs >> xv >> val)) throw ConfigError(path + ":" + std::to_string(line) + ": expected 'x value'");
      const double expect = t.lo[0] + static_cast<double>(t.values.size()) * dx;
      if (std::abs(xv - expect) > 1e-6 * (1 + std::abs(dx)))
        throw ConfigError(path + ":" + std::to_string(line) + ": nodes must be uniform on the support");
      t.values.push_back(val);
    }
  } else if (h.size() == 6) {
    t.dim = 2;
    t.lo = {h[0], h[2]};
    t.hi = {h[1], h[3]};
    t.n = {static_cast<int>(h[4]), static_cast<int>(h[5])};
    std::vector<double> rows;
    for (double v; in >> v;) rows.push_back(v);
    if (rows.size() != static_cast<std::size_t>(t.n[0]) * t.n[1])
      throw ConfigError(path + ": expected " + std::to_string(t.n[0] * t.n[1]) + " samples");
    t.values.resize(rows.size());
    for (int j = 0; j < t.n[1]; ++j)
      for (int i = 0; i < t.n[0]; ++i) t.values[static_cast<std::size_t>(i) * t.n[1] + j] = rows[j * t.n[0] + i];
  } else {
    throw ConfigError(path + ":1: support header needs 3 (1D) or 6 (2D) numbers");
  }
  return KernelSpec::tabulated(std::move(t));
}

}  // namespace nkpp
