#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nkpp/errors.hpp"

namespace nkpp {

/// Closed-form kernel families work in any dimension up to this bound; the
/// grid solver supports d <= 2.
inline constexpr int kMaxDim = 4;

/// Small fixed-capacity point/vector in R^d.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  Vec(std::initializer_list<double> xs) : Vec(static_cast<int>(xs.size())) {
    int i = 0;
    for (double x : xs) c_[i++] = x;
  }
  explicit Vec(std::span<const double> xs) : Vec(static_cast<int>(xs.size())) {
    for (int i = 0; i < dim_; ++i) c_[i] = xs[i];
  }

  int dim() const { return dim_; }
  double& operator[](int i) { return c_[i]; }
  double operator[](int i) const { return c_[i]; }
  std::span<const double> span() const { return {c_.data(), static_cast<std::size_t>(dim_)}; }
  std::vector<double> to_vector() const { return {c_.begin(), c_.begin() + dim_}; }

  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < dim_; ++i) s += c_[i] * o.c_[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  friend Vec operator+(Vec a, const Vec& b) {
    for (int i = 0; i < a.dim_; ++i) a.c_[i] += b.c_[i];
    return a;
  }
  friend Vec operator-(Vec a, const Vec& b) {
    for (int i = 0; i < a.dim_; ++i) a.c_[i] -= b.c_[i];
    return a;
  }
  friend Vec operator*(double s, Vec a) {
    for (int i = 0; i < a.dim_; ++i) a.c_[i] *= s;
    return a;
  }
  friend Vec operator-(Vec a) { return -1.0 * a; }

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

/// A unit vector (direction on the sphere S^{d-1}); construction enforces |xi| = 1 within 1e-12.
class Direction {
 public:
  Direction() = default;
  explicit Direction(const Vec& v) : v_(v) {
    if (std::abs(v.norm() - 1.0) > 1e-12) throw DomainError("direction must have unit norm");
  }
  Direction(std::initializer_list<double> xs) : Direction(Vec(xs)) {}

  static Direction normalized(const Vec& v) {
    const double n = v.norm();
    if (!(n > 0)) throw DomainError("cannot normalize a zero vector");
    return Direction((1.0 / n) * v);
  }
  /// 2D direction at the given angle (radians).
  static Direction from_angle(double angle) {
    return Direction(Vec{std::cos(angle), std::sin(angle)});
  }

  const Vec& vec() const { return v_; }
  int dim() const { return v_.dim(); }
  double operator[](int i) const { return v_[i]; }
  double dot(const Vec& x) const { return v_.dot(x); }
  Direction operator-() const { return Direction(-v_); }

 private:
  Vec v_;
};

/// Default direction set: +-1 in 1D, n equally spaced angles in 2D.
inline std::vector<Direction> default_directions(int dim, int n2d = 64) {
  std::vector<Direction> out;
  if (dim == 1) {
    out.push_back(Direction{1.0});
    out.push_back(Direction{-1.0});
  } else if (dim == 2) {
    for (int k = 0; k < n2d; ++k) out.push_back(Direction::from_angle(2.0 * std::numbers::pi * k / n2d));
  } else {
    for (int i = 0; i < dim; ++i) {
      Vec e(dim);
      e[i] = 1.0;
      out.emplace_back(e);
      out.emplace_back(-e);
    }
  }
  return out;
}

}  // namespace nkpp
