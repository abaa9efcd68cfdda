#pragma once

// Periodic rectangular grids, fields on them, and initial conditions.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/vec.hpp"

namespace nkpp {

/// Periodic grid with nodes x_i = lower + i h, h = L / n, on each axis.
/// Flat index is ix * ny + iy (with ny = 1 in 1D).
struct Grid {
  int dim = 1;
  std::array<int, 2> n{1, 1};
  std::array<double, 2> length{1.0, 1.0};
  std::array<double, 2> lower{-0.5, 0.0};

  static Grid line(int n, double L) { return line(n, L, -0.5 * L); }
  static Grid line(int n, double L, double lower) {
    Grid g;
    g.dim = 1;
    g.n = {n, 1};
    g.length = {L, 1.0};
    g.lower = {lower, 0.0};
    g.validate();
    return g;
  }
  static Grid square(int n, double L) { return plane(n, n, L, L); }
  static Grid plane(int nx, int ny, double Lx, double Ly) {
    Grid g;
    g.dim = 2;
    g.n = {nx, ny};
    g.length = {Lx, Ly};
    g.lower = {-0.5 * Lx, -0.5 * Ly};
    g.validate();
    return g;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
      if (n[a] < 2 || (n[a] & (n[a] - 1)) != 0) throw ConfigError("grid points per axis must be a power of two >= 2");
      if (!(length[a] > 0) || !std::isfinite(length[a])) throw ConfigError("grid extent must be positive");
      if (!std::isfinite(lower[a])) throw ConfigError("grid lower corner must be finite");
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * (dim == 2 ? n[1] : 1); }
  int ny() const { return dim == 2 ? n[1] : 1; }
  double h(int axis = 0) const { return length[axis] / n[axis]; }
  double cell_volume() const { return dim == 1 ? h(0) : h(0) * h(1); }
  double coord(int axis, int i) const { return lower[axis] + i * h(axis); }
  double upper(int axis) const { return lower[axis] + length[axis]; }

  Vec point(std::size_t flat) const {
    if (dim == 1) return Vec{coord(0, static_cast<int>(flat))};
    const int iy = static_cast<int>(flat % n[1]);
    const int ix = static_cast<int>(flat / n[1]);
    return Vec{coord(0, ix), coord(1, iy)};
  }
  std::size_t index(int ix, int iy = 0) const { return static_cast<std::size_t>(ix) * ny() + iy; }

  /// Grid cells within `cells` of the periodic seam (first/last indices on any axis).
  bool near_seam(std::size_t flat, int cells) const {
    const int ix = static_cast<int>(flat / ny());
    if (ix < cells || ix >= n[0] - cells) return true;
    if (dim == 2) {
      const int iy = static_cast<int>(flat % n[1]);
      if (iy < cells || iy >= n[1] - cells) return true;
    }
    return false;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// A discretized function u(., t) on a grid.
struct Field {
  Grid grid;
  double t = 0.0;
  std::vector<double> values;

  Field() = default;
  Field(Grid g, double time = 0.0) : grid(g), t(time), values(g.size(), 0.0) {}

  double max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values) m = std::max(m, v);
    return m;
  }
  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double integral() const {
    double s = 0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
  }
};

/// ||f||_{lambda,xi} = max over grid of |f(x)| exp(lambda x.xi), evaluated in
/// log space so that large exponents do not overflow prematurely.
inline double weighted_norm(const Field& u, const Direction& xi, double lambda) {
  if (!(lambda >= 0)) throw DomainError("weighted_norm: lambda must be nonnegative");
  if (xi.dim() != u.grid.dim) throw DomainError("weighted_norm: direction dimension mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double v = std::abs(u.values[i]);
    if (v == 0) continue;
    best = std::max(best, std::log(v) + lambda * xi.dot(u.grid.point(i)));
  }
  return std::isinf(best) && best < 0 ? 0.0 : std::exp(best);
}

/// Initial condition descriptor.
struct InitialCondition {
  enum class Kind { ball, plane_wave, constant, random, tabulated, half_space };
  Kind kind = Kind::constant;
  Vec center;             ///< ball
  double radius = 1.0;    ///< ball
  double amplitude = 1.0; ///< ball / half_space height, plane_wave cap
  Direction xi;           ///< plane_wave / half_space
  double lambda = 1.0;    ///< plane_wave decay rate
  double offset = 0.0;    ///< plane_wave: exp(-lambda (x.xi - offset)); half_space: x.xi <= offset
  double cutoff = -std::numeric_limits<double>::infinity();  ///< zero where x.xi < cutoff
  double value = 0.0;     ///< constant
  double lo = 0.0, hi = 1.0;  ///< random: iid uniform samples in [lo, hi]
  std::uint64_t seed = 0;
  std::vector<double> samples;  ///< tabulated: one value per grid node

  static InitialCondition ball(const Vec& c, double r, double eta) {
    InitialCondition ic;
    ic.kind = Kind::ball;
    ic.center = c;
    ic.radius = r;
    ic.amplitude = eta;
    return ic;
  }
  static InitialCondition constant(double v) {
    InitialCondition ic;
    ic.kind = Kind::constant;
    ic.value = v;
    return ic;
  }
  /// min(cap, exp(-lambda (x.xi - offset))), zero where x.xi < cutoff.
  static InitialCondition plane_wave(const Direction& xi, double lambda, double cap, double offset = 0.0,
                                     double cutoff = -std::numeric_limits<double>::infinity()) {
    InitialCondition ic;
    ic.kind = Kind::plane_wave;
    ic.xi = xi;
    ic.lambda = lambda;
    ic.amplitude = cap;
    ic.offset = offset;
    ic.cutoff = cutoff;
    return ic;
  }
  static InitialCondition half_space(const Direction& xi, double height, double offset = 0.0,
                                     double cutoff = -std::numeric_limits<double>::infinity()) {
    InitialCondition ic;
    ic.kind = Kind::half_space;
    ic.xi = xi;
    ic.amplitude = height;
    ic.offset = offset;
    ic.cutoff = cutoff;
    return ic;
  }
  static InitialCondition random(double lo, double hi, std::uint64_t seed) {
    InitialCondition ic;
    ic.kind = Kind::random;
    ic.lo = lo;
    ic.hi = hi;
    ic.seed = seed;
    return ic;
  }
  static InitialCondition tabulated(std::vector<double> values) {
    InitialCondition ic;
    ic.kind = Kind::tabulated;
    ic.samples = std::move(values);
    return ic;
  }

  Field sample(const Grid& g) const {
    Field f(g, 0.0);
    auto& u = f.values;
    switch (kind) {
      case Kind::constant: std::fill(u.begin(), u.end(), value); break;
      case Kind::ball:
        if (center.dim() != g.dim) throw ConfigError("initial ball center dimension mismatch");
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = (g.point(i) - center).norm() <= radius ? amplitude : 0.0;
        break;
      case Kind::plane_wave:
        if (xi.dim() != g.dim) throw ConfigError("initial plane-wave direction dimension mismatch");
        for (std::size_t i = 0; i < u.size(); ++i) {
          const double s = xi.dot(g.point(i));
          u[i] = s < cutoff ? 0.0 : std::min(amplitude, std::exp(-lambda * (s - offset)));
        }
        break;
      case Kind::half_space:
        if (xi.dim() != g.dim) throw ConfigError("initial half-space direction dimension mismatch");
        for (std::size_t i = 0; i < u.size(); ++i) {
          const double s = xi.dot(g.point(i));
          u[i] = (s <= offset && s >= cutoff) ? amplitude : 0.0;
        }
        break;
      case Kind::random: {
        std::mt19937_64 rng(seed);
        // Map raw 64-bit draws to [0, 1) directly so the stream is portable.
        for (auto& v : u) v = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        break;
      }
      case Kind::tabulated:
        if (samples.size() != u.size()) throw ConfigError("tabulated initial condition: size does not match grid");
        u = samples;
        break;
    }
    for (double v : u) {
      if (!std::isfinite(v)) throw ConfigError("initial condition has non-finite values");
    }
    return f;
  }
};

}  // namespace nkpp
