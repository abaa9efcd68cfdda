// Acceptance suite: one PASS/FAIL line per criterion.
//   nkpp_acceptance                 all criteria
//   nkpp_acceptance --criterion N   just one

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nkpp/nkpp.hpp"

using namespace nkpp;

namespace {

const Direction kRight{1.0};

struct Result {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

SimConfig base(const Grid& g, const KernelSpec& k, const ModelParams& p, double t_end) {
  SimConfig c;
  c.grid = g;
  c.params = p;
  c.kernel_plus = k;
  c.kernel_minus = k;
  c.dt = std::min(0.1, c.dt_max());
  c.t_end = t_end;
  c.snapshot_stride = 10;
  return c;
}

// ---------------------------------------------------------------------------
// 1. Speed formula against a dense scan with hand-written MGFs.

struct OracleKernel {
  std::string name;
  KernelSpec spec;
  double sigma;  // abscissa
  std::function<double(double)> A, dA;
};

Result criterion_1() {
  Stopwatch clock;
  std::vector<OracleKernel> ks;
  for (double mu : {1.0, 2.0, 3.0})
    ks.push_back({"laplace(" + num(mu) + ")", KernelSpec::laplace(mu), mu,
                  [mu](double l) { return mu * mu / (mu * mu - l * l); },
                  [mu](double l) { return 2 * mu * mu * l / std::pow(mu * mu - l * l, 2); }});
  for (double s : {0.5, 1.0, 2.0})
    ks.push_back({"gaussian(" + num(s) + ")", KernelSpec::gaussian(s), std::numeric_limits<double>::infinity(),
                  [s](double l) { return std::exp(0.5 * s * s * l * l); },
                  [s](double l) { return s * s * l * std::exp(0.5 * s * s * l * l); }});
  ks.push_back({"uniform(1)", KernelSpec::uniform_ball(1.0), std::numeric_limits<double>::infinity(),
                [](double l) { return std::sinh(l) / l; },
                [](double l) { return (l * std::cosh(l) - std::sinh(l)) / (l * l); }});

  double worst_c = 0, worst_foc = 0;
  std::string worst_case;
  for (const auto& k : ks) {
    for (const ModelParams p : {ModelParams{2.0, 1.0, 1.0, 0.0}, ModelParams{1.5, 0.5, 1.0, 0.0}}) {
      const auto r = minimal_speed(k.spec, p, kRight);
      const double c = r.c_star.value(), lam = *r.lambda_star;
      // Dense grid of 1e6 points on (0, hi).
      const double hi = std::isfinite(k.sigma) ? k.sigma : 20.0;
      const int N = 1000000;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 1; i < N; ++i) {
        const double l = hi * i / N;
        best = std::min(best, (p.kappa_plus * k.A(l) - p.m) / l);
      }
      const double rel = std::abs(c - best) / best;
      const double foc = std::abs(lam * k.dA(lam) * p.kappa_plus - (p.kappa_plus * k.A(lam) - p.m)) /
                         std::max(1.0, p.kappa_plus * k.A(lam) - p.m);
      if (rel > worst_c) {
        worst_c = rel;
        worst_case = k.name;
      }
      worst_foc = std::max(worst_foc, foc);
    }
  }
  const double secs = clock.seconds();
  return {worst_c <= 1e-8 && worst_foc <= 1e-6 && secs < 5.0,
          "max rel |c - dense| = " + num(worst_c) + " (" + worst_case + "), max FOC residual = " + num(worst_foc) +
              ", " + num(secs, 3) + " s (limit 5 s)"};
}

// ---------------------------------------------------------------------------
// 2. Level-set slopes of 1D runs against c_*.

double level_slope(const KernelSpec& k, const ModelParams& p, int n, double* secs) {
  auto cfg = base(Grid::line(n, 400.0), k, p, 40.0);
  cfg.initial = InitialCondition::ball(Vec{0.0}, 2.0, p.theta());
  cfg.seam_guard = true;
  LevelTracker tracker(kRight, 0.5 * p.theta());
  Stopwatch clock;
  solve(cfg, [&](const Field& f) { tracker(f); });
  *secs = clock.seconds();
  const auto tr = tracker.finish();
  return tr.fit.ok ? tr.slope() : std::numeric_limits<double>::quiet_NaN();
}

Result criterion_2() {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const std::vector<std::pair<std::string, KernelSpec>> ks{{"laplace(2)", KernelSpec::laplace(2.0)},
                                                           {"gaussian(1)", KernelSpec::gaussian(1.0)},
                                                           {"uniform(1)", KernelSpec::uniform_ball(1.0)}};
  bool ok = true;
  double slowest = 0;
  std::ostringstream os;
  for (const auto& [name, k] : ks) {
    const double c = minimal_speed(k, p, kRight).c_star.value();
    std::vector<double> s, err;
    for (int n : {1024, 2048, 4096}) {
      double secs = 0;
      s.push_back(level_slope(k, p, n, &secs));
      err.push_back(std::abs(s.back() - c) / c);
      slowest = std::max(slowest, secs);
    }
    // Grid convergence: successive refinements move the slope less, and by under 1% at the end.
    // The remaining gap to c_* is the finite-time lag of the front, which refinement cannot remove.
    const double d1 = std::abs(s[1] - s[0]) / c, d2 = std::abs(s[2] - s[1]) / c;
    const bool here = err[2] <= 0.05 && (d2 < d1 || d2 < 1e-4) && d2 < 0.01;
    ok = ok && here;
    os << name << ": err " << num(err[2], 3) << " (n=1024/2048: " << num(err[0], 3) << "/" << num(err[1], 3)
       << "), refinement changes " << num(d1, 2) << " -> " << num(d2, 2) << "; ";
  }
  os << "slowest run " << num(slowest, 3) << " s";
  return {ok && slowest < 120.0, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Decay outside t {x.xi <= c_* + delta}.

Result criterion_3() {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  // Point-sampled Gaussian: its discrete exponential moments match the continuous ones.
  const auto k = KernelSpec::gaussian(1.0);
  const auto sp = minimal_speed(k, p, kRight);
  auto cfg = base(Grid::line(8192, 240.0, -140.0), k, p, 20.0);
  cfg.initial = InitialCondition::plane_wave(kRight, *sp.lambda_star, p.theta(), 0.0, -20.0);
  cfg.seam_guard = true;
  const auto tr = solve(cfg);
  bool ok = true;
  std::ostringstream os;
  for (double delta : {0.1, 0.3}) {
    const auto r = check_decay_outside(tr.snapshots, sp, delta, 2.0);
    ok = ok && r.pass && !r.truncated;
    os << "delta=" << delta << ": max measured/bound " << num(r.max_ratio()) << "; ";
  }
  os << "t in [2, " << cfg.t_end << "]";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 4. Tube and ordering on random configurations.

Result criterion_4() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0;
  double worst_tube = 0, worst_order = 0;
  for (int trial = 0; accepted < 20 && trial < 500; ++trial) {
    const ModelParams p{1.2 + 2.0 * u(rng), 0.2 + 0.8 * u(rng), 0.2 + u(rng), 0.5 * u(rng)};
    if (!p.satisfies_a1()) continue;
    const KernelSpec kp = u(rng) < 0.5 ? KernelSpec::gaussian(0.5 + u(rng)) : KernelSpec::laplace(1.0 + u(rng));
    const KernelSpec km = KernelSpec::gaussian(0.5 + u(rng));
    if (!check_assumptions(kp, km, p, default_directions(1)).a2_comparison) continue;
    ++accepted;
    const double th = p.theta();
    auto cfg = base(Grid::line(128, 64.0), kp, p, 3.0);
    cfg.kernel_minus = km;
    cfg.tube_mode = false;
    cfg.snapshot_stride = 1;
    std::vector<double> lo(128), hi(128);
    for (int i = 0; i < 128; ++i) {
      lo[i] = th * u(rng);
      hi[i] = std::min(th, lo[i] + th * u(rng));
    }
    auto a = cfg, b = cfg;
    a.initial = InitialCondition::tabulated(lo);
    b.initial = InitialCondition::tabulated(hi);
    const auto ta = solve(a), tb = solve(b);
    for (std::size_t s = 0; s < ta.snapshots.size(); ++s) {
      for (const auto* f : {&ta.snapshots[s], &tb.snapshots[s]})
        worst_tube = std::max({worst_tube, -f->min() / th, (f->max() - th) / th});
      for (std::size_t i = 0; i < lo.size(); ++i)
        worst_order = std::max(worst_order, ta.snapshots[s].values[i] - tb.snapshots[s].values[i]);
    }
  }
  return {accepted == 20 && worst_tube <= 1e-9 && worst_order <= 1e-9,
          std::to_string(accepted) + " configs; max tube excursion " + num(worst_tube) + " theta, max order violation " +
              num(worst_order)};
}

// ---------------------------------------------------------------------------
// 5. Linear majorant.

Result criterion_5() {
  const ModelParams p{2.0, 1.0, 0.5, 0.5};
  const auto k = KernelSpec::gaussian(1.0);
  const auto sp = minimal_speed(k, p, kRight);
  const double ls = *sp.lambda_star;
  auto cfg = base(Grid::line(2048, 200.0), k, p, 5.0);
  cfg.dt = 0.05;
  cfg.initial = InitialCondition::plane_wave(kRight, ls, p.theta(), 0.0, -20.0);
  const auto u = solve(cfg), w = solve_linear_majorant(cfg);
  double worst_dom = 0;
  for (std::size_t s = 0; s < u.snapshots.size(); ++s)
    for (std::size_t i = 0; i < u.snapshots[s].values.size(); ++i)
      worst_dom = std::max(worst_dom, u.snapshots[s].values[i] - w.snapshots[s].values[i]);
  bool ok = worst_dom <= 1e-9 && u.snapshots.size() == w.snapshots.size();
  std::ostringstream os;
  os << "max(u - w) = " << num(worst_dom) << "; ";
  for (double lam : {0.5 * ls, ls}) {
    double ratio = 0;
    for (const auto& pt : check_weighted_growth(w, k, p, kRight, lam)) {
      ratio = std::max(ratio, pt.measured / pt.bound);
      ok = ok && pt.pass;
    }
    os << "lambda=" << num(lam) << ": max norm/bound " << num(ratio, 10) << "; ";
  }
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 6. Weinberger iteration on the 1D Laplace benchmark.

Result criterion_6() {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::laplace(2.0);
  const double c = minimal_speed(k, p, kRight).c_star.value();
  const auto rk = ReducedKernels::along(k, k, kRight);
  std::ostringstream os;
  bool ok = true;
  std::vector<double> speeds;
  for (double T : {0.5, 1.0}) {
    const auto est = estimate_cT_star(T, rk, p, 0.05 * T);
    bool dich = true;
    for (const auto& t : est.trials) dich = dich && !t.dichotomy_violation;
    const double rel = std::abs(est.speed() - c) / c;
    ok = ok && est.conclusive && dich && rel <= 0.1;
    speeds.push_back(est.speed());
    os << "T=" << T << ": c_T/T=" << num(est.speed(), 5) << " (rel " << num(rel, 3) << "); ";
  }
  const double agree = std::abs(speeds[0] - speeds[1]) / c;
  ok = ok && agree <= 0.1;
  // Two seed plateaus classify the same speeds identically.
  WeinbergerOptions low, high;
  low.plateau = 0.3;
  high.plateau = 0.7;
  int same = 0, total = 0;
  for (double f : {0.5, 0.8, 1.25, 2.0}) {
    const auto a = classify_speed(1.0, f * c, rk, p, low), b = classify_speed(1.0, f * c, rk, p, high);
    ++total;
    same += a.cls == b.cls && a.cls != SpeedClass::undecided;
  }
  ok = ok && same == total;
  os << "T values agree to " << num(agree, 3) << "; plateaus 0.3/0.7 agree on " << same << "/" << total << " speeds";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 7. Two-dimensional anisotropic front.

Result criterion_7() {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::anisotropic_gaussian_2d(1.0, 0.5);
  const double th = p.theta();
  const auto P = front_set(k, p, default_directions(2, 64));
  double cmax = 0;
  for (const auto& o : P.offsets) cmax = std::max(cmax, o.value());
  auto cfg = base(Grid::square(1024, 200.0), k, p, 25.0);
  cfg.initial = InitialCondition::ball(Vec{0.0, 0.0}, 2.0, th);
  cfg.seam_guard = true;
  cfg.seam_level = 1e-3;
  ExponentialFit outside;
  Field last;
  Stopwatch clock;
  solve(cfg, [&](const Field& f) {
    if (auto sup = sup_over_scaled_region(f, GaugeBand{}, P, &outside.truncated)) {
      outside.times.push_back(f.t);
      outside.sup_values.push_back(*sup);
    }
    last = f;
  });
  const double secs = clock.seconds();
  fit_exponential(outside);
  auto poly = level_polygon(last, 0.5 * th, 128);
  for (auto& v : poly) v = (1.0 / last.t) * v;
  const double dH = poly.size() >= 3 ? geom::hausdorff_closed_polylines(poly, P.vertices)
                                     : std::numeric_limits<double>::infinity();
  const auto inside = min_inside_scaled(last, P, 0.8);
  // Compact data lag the front by about (d + 2) / (2 lambda_*) log t; relative to c_* t this is
  // the same in every direction for a Gaussian kernel.
  const auto sx = minimal_speed(k, p, Direction{1.0, 0.0});
  const double lag = 2.0 * std::log(last.t) / (*sx.lambda_star * sx.c_star.value() * last.t);
  const double inside_min = inside ? inside->min_value : 0.0;
  const bool ok = dH <= 0.1 * cmax && inside_min > 0.95 * th && outside.pass && outside.nu > 0 &&
                  !outside.trivial && secs < 900.0;
  return {ok, "Hausdorff " + num(dH) + " (bound " + num(0.1 * cmax) + "), min on 0.8 t T " + num(inside_min) +
                  " theta, outside nu=" + num(outside.nu) + " R2=" + num(outside.r2, 6) + ", predicted relative lag " +
                  num(lag, 3) + ", " + num(secs, 3) + " s (limit 900 s)"};
}

// ---------------------------------------------------------------------------
// 8. Hair-trigger effect.

struct HairTrigger {
  std::vector<double> times, mins;
  double hit = std::numeric_limits<double>::infinity();
  bool eventually_monotone = false;
};

HairTrigger hair_trigger(double amplitude) {
  const ModelParams p{2.0, 1.0, 0.5, 0.5};
  const double th = p.theta();
  auto cfg = base(Grid::square(256, 128.0), KernelSpec::gaussian(1.0, 2), p, 25.0);
  cfg.initial = InitialCondition::ball(Vec{0.0, 0.0}, 1.0, amplitude * th);
  cfg.snapshot_stride = 5;
  HairTrigger h;
  solve(cfg, [&](const Field& f) {
    h.times.push_back(f.t);
    h.mins.push_back(min_over_ball(f, Vec{0.0, 0.0}, 2.0));
  });
  std::size_t last_drop = 0;
  for (std::size_t i = 1; i < h.mins.size(); ++i)
    if (h.mins[i] < h.mins[i - 1] - 1e-12 * th) last_drop = i;
  for (std::size_t i = 0; i < h.mins.size(); ++i)
    if (h.mins[i] > 0.95 * th) {
      h.hit = h.times[i];
      break;
    }
  h.eventually_monotone = last_drop + 3 < h.mins.size() && h.times[last_drop] < h.hit;
  return h;
}

Result criterion_8() {
  const auto a = hair_trigger(0.01), b = hair_trigger(0.001);
  const bool ok = a.eventually_monotone && b.eventually_monotone && std::isfinite(a.hit) && std::isfinite(b.hit) &&
                  b.hit > a.hit && a.mins.back() > 0.95 * 1.0 && b.mins.back() > 0.95 * 1.0;
  return {ok, "amplitude 0.01 theta hits 0.95 theta at t=" + num(a.hit) + ", 0.001 theta at t=" + num(b.hit) +
                  "; final minima " + num(a.mins.back()) + ", " + num(b.mins.back())};
}

// ---------------------------------------------------------------------------
// 9. Infinite speed for a polynomial tail.

Result criterion_9() {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::pareto_tail(2.0);
  const auto sp = minimal_speed(k, p, kRight);
  const auto P = front_set(k, p, default_directions(1));
  auto cfg = base(Grid::line(16384, 4000.0), k, p, 18.0);
  cfg.allow_kernel_truncation = true;
  cfg.initial = InitialCondition::ball(Vec{0.0}, 2.0, p.theta());
  LevelTracker tracker(kRight, 0.5 * p.theta());
  solve(cfg, [&](const Field& f) { tracker(f); });
  const auto tr = tracker.finish();
  const auto sl = check_superlinear(tr);
  const bool ok = sp.c_star.is_infinite() && !P.bounded && sl.increasing;
  std::string ratios;
  if (!sl.ratios.empty()) ratios = num(sl.ratios.front()) + " -> " + num(sl.ratios.back());
  return {ok, std::string("c_*=") + (sp.c_star.is_infinite() ? "inf" : num(sp.c_star.value())) +
                  ", front set " + (P.bounded ? "bounded" : "unbounded") + ", s(t)/t over the last half " + ratios +
                  (sl.increasing ? " (increasing)" : " (not increasing)")};
}

// ---------------------------------------------------------------------------
// 10. Relaxation to theta and the zero state.

Result criterion_10() {
  const ModelParams p{2.0, 1.0, 0.5, 0.5};
  const double th = p.theta();
  auto cfg = base(Grid::line(512, 128.0), KernelSpec::laplace(1.0), p, 100.0);
  cfg.kernel_minus = KernelSpec::laplace(2.0);
  double worst = 0;
  int relaxed = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.initial = InitialCondition::random(0.0, th, seed);
    const auto r = stationary_relaxation_check(cfg);
    worst = std::max(worst, r.dist_to_theta);
    relaxed += r.classification == StationaryClass::converged_to_theta;
  }
  cfg.initial = InitialCondition::constant(0.0);
  double zero_max = 0;
  solve(cfg, [&](const Field& f) { zero_max = std::max({zero_max, f.max(), -f.min()}); });
  return {relaxed == 5 && worst <= 1e-3 * th && zero_max == 0.0,
          std::to_string(relaxed) + "/5 random data within " + num(worst / th) + " theta of theta at t=100; zero data max |u| = " +
              num(zero_max)};
}

const std::vector<std::pair<std::string, std::function<Result()>>> kCriteria{
    {"speed formula vs dense oracle", criterion_1},
    {"empirical front speed", criterion_2},
    {"decay outside the front", criterion_3},
    {"tube and comparison", criterion_4},
    {"linear majorant", criterion_5},
    {"Weinberger cross-check", criterion_6},
    {"anisotropic front geometry", criterion_7},
    {"hair-trigger", criterion_8},
    {"infinite speed", criterion_9},
    {"stationary triviality", criterion_10},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for nkpp"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    const auto& [name, fn] = kCriteria[i];
    Result r;
    Stopwatch clock;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %zu %s  %s: %s [%.1f s]\n", i + 1, r.pass ? "PASS" : "FAIL", name.c_str(),
                r.detail.c_str(), clock.seconds());
    std::fflush(stdout);
    all = all && r.pass;
  }
  return all ? 0 : 1;
}
