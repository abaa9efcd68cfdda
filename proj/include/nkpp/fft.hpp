#pragma once

// Periodic convolution with sampled kernels via FFTW real transforms.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/grid.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/quadrature.hpp"

namespace nkpp {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  void* p = fftw_malloc(sizeof(T) * n);
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(static_cast<T*>(p));
}

}  // namespace detail

/// Owns a pair of r2c / c2r plans and their buffers for one grid shape.
class RealFft {
 public:
  explicit RealFft(const Grid& g) : grid_(g) {
    real_size_ = g.size();
    complex_size_ = g.dim == 1 ? static_cast<std::size_t>(g.n[0] / 2 + 1)
                               : static_cast<std::size_t>(g.n[0]) * (g.n[1] / 2 + 1);
    real_ = detail::fftw_alloc<double>(real_size_);
    spec_ = detail::fftw_alloc<fftw_complex>(complex_size_);
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (g.dim == 1) {
      fwd_ = fftw_plan_dft_r2c_1d(g.n[0], real_.get(), spec_.get(), FFTW_ESTIMATE);
      inv_ = fftw_plan_dft_c2r_1d(g.n[0], spec_.get(), real_.get(), FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_r2c_2d(g.n[0], g.n[1], real_.get(), spec_.get(), FFTW_ESTIMATE);
      inv_ = fftw_plan_dft_c2r_2d(g.n[0], g.n[1], spec_.get(), real_.get(), FFTW_ESTIMATE);
    }
    if (!fwd_ || !inv_) throw NumericalError("FFTW planning failed");
  }
  ~RealFft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* real() { return real_.get(); }
  std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_.get()); }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  /// real() -> spectrum()
  void forward() { fftw_execute(fwd_); }
  /// spectrum() -> real(), unnormalized (scaled by the number of points).
  void inverse() { fftw_execute(inv_); }

 private:
  Grid grid_;
  std::size_t real_size_ = 0, complex_size_ = 0;
  detail::FftwBuffer<double> real_;
  detail::FftwBuffer<fftw_complex> spec_;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
};

/// How a kernel is turned into grid weights.
enum class KernelSampling {
  automatic,     ///< point values for smooth (Gaussian) families, cell averages otherwise
  point,         ///< a(x_j)
  cell_average,  ///< mean of a over the grid cell centered at x_j
};

/// Kernel weights K_j on the periodic displacement lattice (index 0 is zero
/// displacement; indices past n/2 wrap to negative displacements), scaled so
/// that sum_j K_j * cell_volume = 1.
inline std::vector<double> sample_kernel(const KernelSpec& k, const Grid& g,
                                         KernelSampling mode = KernelSampling::automatic) {
  if (k.dim() != g.dim) throw ConfigError("kernel dimension does not match grid");
  if (mode == KernelSampling::automatic) {
    const bool smooth = k.family() == Family::gaussian || k.family() == Family::anisotropic_gaussian ||
                        k.family() == Family::shifted_gaussian;
    mode = smooth ? KernelSampling::point : KernelSampling::cell_average;
  }
  auto displacement = [&](int axis, int j) {
    const int n = g.n[axis];
    return (j < n / 2 ? j : j - n) * g.h(axis);
  };
  std::vector<double> w(g.size(), 0.0);
  if (g.dim == 1) {
    const double h = g.h(0);
    for (int j = 0; j < g.n[0]; ++j) {
      const double x = displacement(0, j);
      if (mode == KernelSampling::point) {
        w[j] = k(Vec{x});
        continue;
      }
      std::vector<double> knots{x - 0.5 * h};
      for (double b : k.line_breakpoints(Vec{0.0}, Vec{1.0})) {
        if (b > x - 0.5 * h && b < x + 0.5 * h) knots.push_back(b);
      }
      knots.push_back(x + 0.5 * h);
      std::sort(knots.begin(), knots.end());
      auto f = [&](double s) { return k(Vec{s}); };
      w[j] = quad::integrate_partition(f, knots, 1e-10, 1e-300).value / h;
    }
  } else {
    // 5x5 Gauss-Legendre per cell.
    static constexpr double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                     0.9061798459386640};
    static constexpr double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};
    const double hx = g.h(0), hy = g.h(1);
    for (int i = 0; i < g.n[0]; ++i) {
      const double x = displacement(0, i);
      for (int j = 0; j < g.n[1]; ++j) {
        const double y = displacement(1, j);
        double v = 0;
        if (mode == KernelSampling::point) {
          v = k(Vec{x, y});
        } else {
          for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b) v += wg[a] * wg[b] * k(Vec{x + 0.5 * hx * xg[a], y + 0.5 * hy * xg[b]});
          v *= 0.25;
        }
        w[g.index(i, j)] = v;
      }
    }
  }
  double mass = 0;
  for (double v : w) mass += v;
  mass *= g.cell_volume();
  if (!(mass > 0)) throw NumericalError("sampled kernel has zero mass on the grid (kernel narrower than a cell?)");
  for (double& v : w) v /= mass;
  return w;
}

/// True when all but ~eps of the kernel mass lies inside the half-domain box,
/// so periodic wrap-around of the kernel is negligible.
inline bool kernel_fits_half_domain(const KernelSpec& k, const Grid& g, double eps = 1e-12) {
  const double r = k.mass_radius(eps);
  const Vec c = k.center();
  for (int a = 0; a < g.dim; ++a) {
    if (std::abs(c[a]) + r >= 0.5 * g.length[a]) return false;
  }
  return true;
}

/// Spectral convolution (a * u)(x_i) ~ sum_j K_j u_{i-j} * cell_volume for one
/// or two kernels sharing a grid; one forward transform serves all kernels.
class Convolver {
 public:
  Convolver(const Grid& g, const std::vector<const KernelSpec*>& kernels,
            KernelSampling mode = KernelSampling::automatic)
      : grid_(g), fft_(g) {
    for (const KernelSpec* k : kernels) {
      samples_.push_back(sample_kernel(*k, g, mode));
      const auto& s = samples_.back();
      std::copy(s.begin(), s.end(), fft_.real());
      fft_.forward();
      const double scale = g.cell_volume() / static_cast<double>(g.size());
      std::vector<std::complex<double>> spec(fft_.spectrum(), fft_.spectrum() + fft_.complex_size());
      for (auto& z : spec) z *= scale;
      spectra_.push_back(std::move(spec));
    }
  }

  const Grid& grid() const { return grid_; }
  std::size_t kernel_count() const { return spectra_.size(); }
  const std::vector<double>& kernel_samples(std::size_t i) const { return samples_.at(i); }

  /// outs[i] = a_i * u for each kernel.
  void convolve(const std::vector<double>& u, std::vector<std::vector<double>*> outs) {
    std::copy(u.begin(), u.end(), fft_.real());
    fft_.forward();
    uhat_.assign(fft_.spectrum(), fft_.spectrum() + fft_.complex_size());
    const auto& uhat = uhat_;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      if (!outs[k]) continue;
      auto* s = fft_.spectrum();
      const auto& K = spectra_[k];
      for (std::size_t i = 0; i < uhat.size(); ++i) s[i] = uhat[i] * K[i];
      fft_.inverse();
      outs[k]->assign(fft_.real(), fft_.real() + fft_.real_size());
    }
  }

 private:
  Grid grid_;
  RealFft fft_;
  std::vector<std::vector<double>> samples_;
  std::vector<std::vector<std::complex<double>>> spectra_;
  std::vector<std::complex<double>> uhat_;
};

/// O(N^2) periodic convolution with the same weights as Convolver.
inline std::vector<double> direct_convolve(const Grid& g, const std::vector<double>& weights,
                                           const std::vector<double>& u) {
  std::vector<double> out(g.size(), 0.0);
  const int nx = g.n[0], ny = g.ny();
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      double s = 0;
      for (int p = 0; p < nx; ++p)
        for (int q = 0; q < ny; ++q) {
          const int di = ((i - p) % nx + nx) % nx, dj = ((j - q) % ny + ny) % ny;
          s += weights[g.index(di, dj)] * u[g.index(p, q)];
        }
      out[g.index(i, j)] = s * g.cell_volume();
    }
  return out;
}

}  // namespace nkpp
