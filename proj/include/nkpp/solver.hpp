#pragma once

// Explicit time stepping of
//   u_t = kappa+ (a+ * u) - m u - u (kappa_l u + kappa_nl (a- * u))
// on a periodic grid, and of its linearization w_t = kappa+ (a+ * w) - m w.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/fft.hpp"
#include "nkpp/grid.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/model.hpp"
#include "nkpp/speed.hpp"

namespace nkpp {

enum class Integrator { rk4, euler };

struct SimConfig {
  Grid grid;
  ModelParams params;
  KernelSpec kernel_plus;
  KernelSpec kernel_minus;
  InitialCondition initial;
  double dt = 0.01;
  double t_end = 1.0;
  int snapshot_stride = 10;  ///< steps between snapshots; t = 0 and t_end are always kept
  Integrator integrator = Integrator::rk4;
  KernelSampling sampling = KernelSampling::automatic;

  bool tube_mode = true;    ///< keep u in [0, theta]: clamp tiny excursions, reject larger ones
  double tube_tol = 1e-9;   ///< relative to theta
  bool seam_guard = false;  ///< abort when mass reaches the periodic seam
  int seam_cells = 5;
  double seam_level = 1e-6;  ///< relative to theta
  /// Values with |u| below noise_floor * theta are set to 0 after each step.
  /// Transform round-off (~1e-16 of max |u|) would otherwise be amplified by
  /// the unstable zero state at rate kappa+ - m. The map is monotone, so
  /// comparison is preserved.
  double noise_floor = 1e-12;
  bool waive_assumptions = false;
  bool allow_kernel_truncation = false;

  /// Explicit-stability heuristic 0.5 / (kappa+ + m + kappa- theta).
  double dt_max() const {
    return 0.5 / (params.kappa_plus + params.m + params.kappa_minus() * std::max(params.theta(), 0.0));
  }

  void validate() const {
    grid.validate();
    params.validate();
    if (kernel_plus.dim() != grid.dim || kernel_minus.dim() != grid.dim)
      throw ConfigError("kernel dimension does not match grid dimension");
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    if (dt > dt_max() * (1 + 1e-12)) {
      std::ostringstream os;
      os << "dt = " << dt << " exceeds the stability bound " << dt_max();
      throw ConfigError(os.str());
    }
    if (!(t_end >= dt)) throw ConfigError("t_end must be at least dt");
    if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
    if (!(noise_floor >= 0) || !(noise_floor < 1e-3)) throw ConfigError("noise_floor must be in [0, 1e-3)");
    if (!allow_kernel_truncation) {
      for (const KernelSpec* k : {&kernel_plus, &kernel_minus}) {
        if (!kernel_fits_half_domain(*k, grid))
          throw ConfigError("kernel " + k->describe() +
                            " does not fit in half the domain; enlarge the grid or allow truncation");
      }
    }
  }
};

struct Trajectory {
  Grid grid;
  std::vector<Field> snapshots;

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& s : snapshots) t.push_back(s.t);
    return t;
  }
};

using SnapshotObserver = std::function<void(const Field&)>;

/// Stepper for one configuration. Kernel spectra are computed once.
class Solver {
 public:
  explicit Solver(SimConfig cfg, bool linear = false) : cfg_(std::move(cfg)), linear_(linear) {
    cfg_.validate();
    const auto& p = cfg_.params;
    if (!linear_ && !p.satisfies_a1() && !cfg_.waive_assumptions)
      throw AssumptionError("(A1) fails: kappa_plus must exceed m");
    if (!linear_ && !cfg_.waive_assumptions) {
      const auto rep = check_assumptions(cfg_.kernel_plus, cfg_.kernel_minus, p, default_directions(cfg_.grid.dim, 8));
      if (!rep.a2_comparison) {
        std::ostringstream os;
        os << "(A2) fails: min of kappa+ a+ - kappa_nl theta a- is " << rep.a2_min_margin;
        throw AssumptionError(os.str());
      }
    }
    if (linear_) cfg_.tube_mode = false;
    theta_ = p.theta() > 0 ? p.theta() : 1.0;

    std::vector<const KernelSpec*> ks{&cfg_.kernel_plus};
    need_minus_ = !linear_ && p.kappa_nl > 0;
    shared_ = cfg_.kernel_minus == cfg_.kernel_plus;
    if (need_minus_ && !shared_) ks.push_back(&cfg_.kernel_minus);
    conv_.emplace(cfg_.grid, ks, cfg_.sampling);
    const std::size_t n = cfg_.grid.size();
    for (auto* v : {&P_, &N_, &k1_, &k2_, &k3_, &k4_, &tmp_}) v->assign(n, 0.0);
  }

  const SimConfig& config() const { return cfg_; }
  const Grid& grid() const { return cfg_.grid; }
  bool linear() const { return linear_; }
  Convolver& convolver() { return *conv_; }

  Field initial_field() const { return cfg_.initial.sample(cfg_.grid); }

  /// out = F(u).
  void rhs(const std::vector<double>& u, std::vector<double>& out) {
    const auto& p = cfg_.params;
    if (need_minus_ && !shared_) conv_->convolve(u, {&P_, &N_});
    else conv_->convolve(u, {&P_});
    const std::vector<double>& N = shared_ ? P_ : N_;
    out.resize(u.size());
    if (linear_) {
      for (std::size_t i = 0; i < u.size(); ++i) out[i] = p.kappa_plus * P_[i] - p.m * u[i];
      return;
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double competition = p.kappa_l * u[i] + (need_minus_ ? p.kappa_nl * N[i] : 0.0);
      out[i] = p.kappa_plus * P_[i] - p.m * u[i] - u[i] * competition;
    }
  }

  /// One step of size dt, followed by the finiteness / tube / seam checks.
  void step(Field& f, double dt) {
    auto& u = f.values;
    const std::size_t n = u.size();
    if (cfg_.integrator == Integrator::euler) {
      rhs(u, k1_);
      for (std::size_t i = 0; i < n; ++i) u[i] += dt * k1_[i];
    } else {
      rhs(u, k1_);
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + 0.5 * dt * k1_[i];
      rhs(tmp_, k2_);
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + 0.5 * dt * k2_[i];
      rhs(tmp_, k3_);
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + dt * k3_[i];
      rhs(tmp_, k4_);
      for (std::size_t i = 0; i < n; ++i) u[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
    f.t += dt;
    post_step(f);
  }

  /// Advances f by `duration`, using ceil(duration / dt) equal steps. The
  /// observer sees the initial field, every `stride`-th step and the final one.
  void advance(Field& f, double duration, const SnapshotObserver& observer = {}, int stride = 0) {
    if (!(duration >= 0)) throw DomainError("advance: negative duration");
    if (stride <= 0) stride = cfg_.snapshot_stride;
    const long steps = std::max<long>(1, static_cast<long>(std::ceil(duration / cfg_.dt - 1e-9)));
    const double dt = duration / steps;
    const double t0 = f.t;
    if (observer) observer(f);
    for (long s = 1; s <= steps; ++s) {
      step(f, dt);
      f.t = t0 + s * dt;  // no accumulated drift in t
      if (observer && (s % stride == 0 || s == steps)) observer(f);
    }
  }

  /// Runs 0 -> t_end from the configured initial condition.
  void run(const SnapshotObserver& observer) {
    Field f = initial_field();
    check_tube(f, "initial condition");
    advance(f, cfg_.t_end, observer);
  }

 private:
  void check_tube(Field& f, const char* where) {
    if (!cfg_.tube_mode) return;
    const double tol = cfg_.tube_tol * theta_;
    for (double& v : f.values) {
      if (v < 0) {
        if (v < -tol) throw_tube(v, f.t, where);
        v = 0.0;
      } else if (v > theta_) {
        if (v > theta_ + tol) throw_tube(v, f.t, where);
        v = theta_;
      }
    }
  }

  [[noreturn]] void throw_tube(double v, double t, const char* where) const {
    std::ostringstream os;
    os << "tube violation in " << where << ": value " << v << " outside [0, " << theta_ << "] at t=" << t;
    throw TubeViolation(os.str());
  }

  void post_step(Field& f) {
    for (double v : f.values) {
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite value at t=" << f.t;
        throw NumericalError(os.str());
      }
    }
    if (cfg_.noise_floor > 0) {
      const double floor = cfg_.noise_floor * theta_;
      for (double& v : f.values) {
        if (std::abs(v) < floor) v = 0.0;
      }
    }
    check_tube(f, "time step");
    if (cfg_.seam_guard) {
      const double level = cfg_.seam_level * theta_;
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] > level && cfg_.grid.near_seam(i, cfg_.seam_cells)) {
          std::ostringstream os;
          os << "solution reached the periodic seam at t=" << f.t << " (u=" << f.values[i] << " at x=(";
          const Vec x = cfg_.grid.point(i);
          for (int a = 0; a < x.dim(); ++a) os << (a ? "," : "") << x[a];
          os << "))";
          throw SeamContamination(os.str());
        }
      }
    }
  }

  SimConfig cfg_;
  bool linear_ = false;
  bool need_minus_ = false;
  bool shared_ = false;
  double theta_ = 1.0;
  std::optional<Convolver> conv_;
  std::vector<double> P_, N_, k1_, k2_, k3_, k4_, tmp_;
};

/// Streams snapshots of the nonlinear solution to `observer`.
inline void solve(const SimConfig& cfg, const SnapshotObserver& observer) { Solver(cfg).run(observer); }

inline Trajectory solve(const SimConfig& cfg) {
  Trajectory tr{cfg.grid, {}};
  solve(cfg, [&](const Field& f) { tr.snapshots.push_back(f); });
  return tr;
}

/// Solution w of the linear equation with the same kernel a+ and initial data.
inline Trajectory solve_linear_majorant(const SimConfig& cfg) {
  Trajectory tr{cfg.grid, {}};
  Solver(cfg, true).run([&](const Field& f) { tr.snapshots.push_back(f); });
  return tr;
}

struct WeightedGrowthPoint {
  double t = 0;
  double measured = 0;  ///< ||w(., t)||_{lambda,xi}
  double bound = 0;     ///< ||u0||_{lambda,xi} exp(p t)
  bool pass = false;
};

/// Compares ||w(., t)||_{lambda,xi} with ||u0||_{lambda,xi} exp(p(xi,lambda) t).
inline std::vector<WeightedGrowthPoint> check_weighted_growth(const Trajectory& w, const KernelSpec& kernel_plus,
                                                              const ModelParams& params, const Direction& xi,
                                                              double lambda, double rel_tol = 1e-6) {
  if (w.snapshots.empty()) return {};
  const double p = linear_growth_rate(kernel_plus, params, xi, lambda);
  const double n0 = weighted_norm(w.snapshots.front(), xi, lambda);
  std::vector<WeightedGrowthPoint> out;
  for (const auto& s : w.snapshots) {
    WeightedGrowthPoint pt;
    pt.t = s.t;
    pt.measured = weighted_norm(s, xi, lambda);
    pt.bound = n0 * std::exp(p * s.t);
    pt.pass = pt.measured <= pt.bound * (1 + rel_tol);
    out.push_back(pt);
  }
  return out;
}

}  // namespace nkpp
