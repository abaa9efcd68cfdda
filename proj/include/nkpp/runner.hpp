#pragma once

// Experiment runner: one config in, artifacts plus summary.json out.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nkpp/config.hpp"
#include "nkpp/errors.hpp"
#include "nkpp/fronts.hpp"
#include "nkpp/io.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/polytope.hpp"
#include "nkpp/solver.hpp"
#include "nkpp/speed.hpp"
#include "nkpp/weinberger.hpp"

#ifndef NKPP_VERSION
#define NKPP_VERSION "0.1.0"
#endif

namespace nkpp {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerdictFailed = 1,
  kExitConfig = 2,
  kExitAssumption = 3,
  kExitNumerical = 4,
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOptions {
  std::optional<std::string> out_dir;  ///< overrides the config's `out`
  bool force = false;                  ///< run even when required assumptions fail
  int threads = 1;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path out_dir;
  std::vector<Verdict> verdicts;

  bool all_pass() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }
};

namespace detail {

inline std::string fmt_ext(const Extended& e) { return e.is_finite() ? io::fmt(e.value()) : "inf"; }

inline std::vector<std::string> xi_columns(int dim) {
  if (dim == 1) return {"xi"};
  std::vector<std::string> out;
  for (int a = 0; a < dim; ++a) out.push_back("xi_" + std::to_string(a));
  return out;
}

inline void push_xi(std::vector<io::CsvWriter::Cell>& row, const Direction& xi) {
  for (int a = 0; a < xi.dim(); ++a) row.emplace_back(xi[a]);
}

class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, const ExperimentConfig& e) : dir_(std::move(dir)), e_(e) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) throw ConfigError("cannot create output directory " + dir_.string());
    const auto probe = dir_ / ".write_test";
    {
      std::ofstream t(probe);
      if (!t) throw ConfigError("output directory " + dir_.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
    std::ofstream cfg(dir_ / "config.toml");
    cfg << e_.source;
  }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  io::CsvWriter csv(const std::string& name, std::vector<std::string> header) const {
    return io::CsvWriter(path(name), e_.hash, std::move(header));
  }
  void json(const std::string& name, io::json j) const {
    io::json out;
    out["config_hash"] = e_.hash;
    for (auto& [k, v] : j.items()) out[k] = v;
    io::write_json(path(name), out);
  }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  const ExperimentConfig& e_;
};

inline io::json assumptions_json(const AssumptionReport& r) {
  io::json j;
  j["a1_beta"] = r.a1_beta;
  j["beta"] = io::num(r.beta);
  j["a2_comparison"] = r.a2_comparison;
  j["a2_min_margin"] = io::num(r.a2_min_margin);
  j["a3_bounded"] = r.a3_bounded;
  j["a3_sup"] = io::num(r.a3_sup);
  j["a5_nondegenerate"] = r.a5_nondeg;
  j["a5_rho"] = io::num(r.a5_rho);
  j["a5_delta"] = io::num(r.a5_delta);
  j["grid_spacing"] = io::num(r.grid_spacing);
  io::json dirs = io::json::array();
  for (const auto& d : r.directions) {
    io::json x;
    x["xi"] = io::json::array();
    for (int a = 0; a < d.xi.dim(); ++a) x["xi"].push_back(d.xi[a]);
    x["a4_first_moment"] = d.a4_first_moment;
    x["m_xi"] = io::num(d.m_xi);
    x["a6_exp_integrable"] = d.a6_exp_integrable;
    x["sigma"] = fmt_ext(d.sigma);
    dirs.push_back(x);
  }
  j["directions"] = dirs;
  return j;
}

inline std::vector<Verdict> assumption_verdicts(const AssumptionReport& r) {
  auto d = [](double v) { return io::fmt(v); };
  return {
      {"A1_beta_positive", r.a1_beta, "beta=" + d(r.beta)},
      {"A2_comparison", r.a2_comparison, "min margin=" + d(r.a2_min_margin)},
      {"A3_bounded", r.a3_bounded, "sup=" + d(r.a3_sup)},
      {"A4_first_moment", r.a4_all(), ""},
      {"A5_nondegenerate", r.a5_nondeg, "rho=" + d(r.a5_rho) + " delta=" + d(r.a5_delta)},
      {"A6_exponential_moment", r.a6_all(), ""},
  };
}

inline std::vector<Direction> experiment_directions(const ExperimentConfig& e, int n2d) {
  return default_directions(e.dim(), n2d);
}

inline std::vector<Verdict> run_speed(const ExperimentConfig& e, const Artifacts& art) {
  const auto& k = e.sim.kernel_plus;
  const auto& p = e.sim.params;
  const auto dirs = experiment_directions(e, e.directions);
  auto header = xi_columns(e.dim());
  for (const char* c : {"c_star", "lambda_star", "sigma", "m_xi", "boundary_minimum", "dense_fallback",
                        "foc_residual"})
    header.emplace_back(c);
  auto csv = art.csv("speeds.csv", header);
  double worst_foc = 0;
  bool moment_ok = true;
  for (const auto& xi : dirs) {
    const auto r = minimal_speed(k, p, xi);
    double foc = 0;
    if (r.lambda_star && !r.boundary_minimum) {
      const double lam = *r.lambda_star;
      const double growth = linear_growth_rate(k, p, xi, lam);
      foc = std::abs(lam * p.kappa_plus * mgf_derivative(k, xi, lam) - growth) / std::max(1.0, std::abs(growth));
      worst_foc = std::max(worst_foc, foc);
    }
    if (r.finite() && !(r.c_star.value() > r.m_xi)) moment_ok = false;
    std::vector<io::CsvWriter::Cell> row;
    push_xi(row, xi);
    row.emplace_back(fmt_ext(r.c_star));
    row.emplace_back(r.lambda_star ? io::fmt(*r.lambda_star) : std::string("nan"));
    row.emplace_back(fmt_ext(r.sigma));
    row.emplace_back(r.m_xi);
    row.emplace_back(r.boundary_minimum ? 1 : 0);
    row.emplace_back(r.dense_fallback ? 1 : 0);
    row.emplace_back(foc);
    csv.row(row);
  }
  return {{"first_order_condition", worst_foc <= 1e-6, "max relative residual=" + io::fmt(worst_foc)},
          {"c_star_exceeds_m_xi", moment_ok, ""}};
}

inline std::vector<Verdict> run_front_set(const ExperimentConfig& e, const Artifacts& art) {
  const auto& k = e.sim.kernel_plus;
  const auto& p = e.sim.params;
  const auto dirs = experiment_directions(e, e.directions);
  const auto poly = front_set(k, p, dirs);
  auto header = xi_columns(e.dim());
  header.emplace_back("offset");
  auto csv = art.csv("front_set.csv", header);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    std::vector<io::CsvWriter::Cell> row;
    push_xi(row, dirs[i]);
    row.emplace_back(fmt_ext(poly.offsets[i]));
    csv.row(row);
  }
  io::json j;
  j["bounded"] = poly.bounded;
  if (e.dim() == 2 && poly.bounded) {
    auto v = art.csv("vertices.csv", {"x", "y"});
    for (const auto& x : poly.vertices) v.row({x[0], x[1]});
    j["direction_resolution_error"] = io::num(direction_resolution_error(k, p, e.directions));
  }
  art.json("front_set.json", j);
  bool interior = true;
  if (poly.bounded && first_moment_finite(k)) interior = poly.contains(full_first_moment(k, p), -1e-12);
  return {{"first_moment_interior", interior, poly.bounded ? "bounded" : "unbounded"}};
}

inline std::vector<Verdict> run_simulate(const ExperimentConfig& e, const Artifacts& art) {
  const auto tr = solve(e.sim);
  io::write_fields(art.path("fields.bin"), tr.grid, tr.snapshots);
  auto csv = art.csv("diagnostics.csv", {"t", "min", "max", "integral"});
  const double theta = e.sim.params.theta();
  double lo = 0, hi = 0;
  for (const auto& f : tr.snapshots) {
    csv.row({f.t, f.min(), f.max(), f.integral()});
    lo = std::min(lo, f.min());
    hi = std::max(hi, f.max());
  }
  const double tol = e.sim.tube_tol * theta;
  return {{"tube", lo >= -tol && hi <= theta + tol, "range=[" + io::fmt(lo) + ", " + io::fmt(hi) + "]"}};
}

inline std::vector<Verdict> run_track(const ExperimentConfig& e, const Artifacts& art) {
  const auto& s = e.sim;
  const double theta = s.params.theta();
  const double level = e.track.level * theta;
  const int dim = e.dim();
  const auto dirs = dim == 1 ? default_directions(1) : default_directions(2, e.track.directions);
  const auto speeds = minimal_speeds(s.kernel_plus, s.params, dirs);
  const auto poly_dirs = dim == 1 ? dirs : default_directions(2, e.directions);
  const auto poly = dim == 1 ? front_set_from_speeds(s.kernel_plus, speeds) : front_set(s.kernel_plus, s.params, poly_dirs);

  std::vector<LevelTracker> trackers;
  for (const auto& xi : dirs) trackers.emplace_back(xi, level);
  std::vector<InsidePoint> inside;
  ExponentialFit outside;
  const GaugeBand band{};
  Field last;
  solve(s, [&](const Field& f) {
    for (auto& t : trackers) t(f);
    if (poly.bounded) {
      if (auto p = min_inside_scaled(f, poly, e.track.inside_shrink)) inside.push_back(*p);
      if (auto sup = sup_over_scaled_region(f, band, poly, &outside.truncated)) {
        outside.times.push_back(f.t);
        outside.sup_values.push_back(*sup);
      }
    }
    last = f;
  });

  TrackOptions topt;
  topt.window_fraction = e.track.window_fraction;
  std::vector<Verdict> out;
  auto trace = art.csv("trace.csv", {"direction", "t", "position"});
  auto header = xi_columns(dim);
  for (const char* c : {"c_star", "slope", "slope_ci95", "r2", "rel_error"}) header.emplace_back(c);
  auto slopes = art.csv("slopes.csv", header);
  bool slopes_ok = true, any_infinite = false, superlinear = true;
  double worst = 0;
  for (std::size_t d = 0; d < trackers.size(); ++d) {
    const FrontTrace tr = trackers[d].finish(topt);
    for (std::size_t i = 0; i < tr.times.size(); ++i) trace.row({static_cast<int>(d), tr.times[i], tr.positions[i]});
    const auto& sp = speeds[d];
    double rel = std::numeric_limits<double>::quiet_NaN();
    if (sp.finite()) {
      rel = tr.fit.ok ? std::abs(tr.slope() - sp.c_star.value()) / std::abs(sp.c_star.value())
                      : std::numeric_limits<double>::infinity();
      worst = std::max(worst, rel);
      slopes_ok = slopes_ok && rel <= e.track.tolerance;
    } else {
      any_infinite = true;
      superlinear = superlinear && check_superlinear(tr, e.track.window_fraction).increasing;
    }
    std::vector<io::CsvWriter::Cell> row;
    push_xi(row, dirs[d]);
    row.emplace_back(fmt_ext(sp.c_star));
    row.emplace_back(tr.fit.slope);
    row.emplace_back(tr.fit.slope_ci95);
    row.emplace_back(tr.fit.r2);
    row.emplace_back(rel);
    slopes.row(row);
  }
  if (any_infinite) out.push_back({"superlinear_level_sets", superlinear, "s(t)/t increasing over the fit window"});
  if (worst > 0 || !any_infinite)
    out.push_back({"slope_matches_c_star", slopes_ok, "max relative error=" + io::fmt(worst)});

  if (dim == 2 && poly.bounded && last.t > 0) {
    auto empirical = level_polygon(last, level, 2 * e.track.directions);
    for (auto& v : empirical) v = (1.0 / last.t) * v;
    auto pc = art.csv("polygon.csv", {"x", "y"});
    for (const auto& v : empirical) pc.row({v[0], v[1]});
    double cmax = 0;
    for (const auto& o : poly.offsets) cmax = std::max(cmax, o.value());
    const double dH = empirical.size() >= 3 ? geom::hausdorff_closed_polylines(empirical, poly.vertices)
                                            : std::numeric_limits<double>::infinity();
    out.push_back({"front_polygon_hausdorff", dH <= e.track.hausdorff_fraction * cmax,
                   "distance=" + io::fmt(dH) + " bound=" + io::fmt(e.track.hausdorff_fraction * cmax)});
  }
  if (poly.bounded) {
    auto ic = art.csv("inside.csv", {"t", "min", "points"});
    for (const auto& p : inside) ic.row({p.t, p.min_value, p.points});
    const bool ok = !inside.empty() && inside.back().min_value >= 0.95 * theta;
    out.push_back({"theta_inside", ok, inside.empty() ? "empty region" : "final min=" + io::fmt(inside.back().min_value)});
    fit_exponential(outside, e.track.window_fraction);
    auto oc = art.csv("outside.csv", {"t", "sup"});
    for (std::size_t i = 0; i < outside.times.size(); ++i) oc.row({outside.times[i], outside.sup_values[i]});
    out.push_back({"exponential_decay_outside", outside.pass,
                   "nu=" + io::fmt(outside.nu) + " r2=" + io::fmt(outside.r2) + (outside.trivial ? " (vanished)" : "")});
  }
  return out;
}

inline std::vector<Verdict> run_weinberger(const ExperimentConfig& e, const Artifacts& art) {
  const auto& s = e.sim;
  const auto& w = e.weinberger;
  const auto rk = ReducedKernels::along(s.kernel_plus, s.kernel_minus, w.xi);
  const auto est = estimate_cT_star(w.T, rk, s.params, w.tol.value_or(0.0), w.options, w.max_doublings);
  auto csv = art.csv("trials.csv", {"c", "classification", "iterations", "tail", "last_increment"});
  bool dichotomy = true;
  double max_sub = -std::numeric_limits<double>::infinity(), min_super = std::numeric_limits<double>::infinity();
  for (const auto& t : est.trials) {
    csv.row({t.c, to_string(t.cls), t.iterations, t.tail, t.last_increment});
    dichotomy = dichotomy && !t.dichotomy_violation;
    if (t.cls == SpeedClass::subcritical) max_sub = std::max(max_sub, t.c);
    if (t.cls == SpeedClass::supercritical) min_super = std::min(min_super, t.c);
  }
  const auto formula = minimal_speed(s.kernel_plus, s.params, w.xi);
  io::json j;
  j["T"] = w.T;
  j["c_lo"] = est.c_lo;
  j["c_hi"] = est.c_hi;
  j["conclusive"] = est.conclusive;
  j["diagnostics"] = est.diagnostics;
  j["speed"] = io::num(est.speed());
  j["c_star_formula"] = fmt_ext(formula.c_star);
  double rel = std::numeric_limits<double>::infinity();
  if (formula.finite()) rel = std::abs(est.speed() - formula.c_star.value()) / formula.c_star.value();
  j["rel_error"] = io::num(rel);
  art.json("bracket.json", j);
  return {{"conclusive", est.conclusive, est.diagnostics},
          {"matches_c_star", est.conclusive && rel <= 0.1, "relative error=" + io::fmt(rel)},
          {"dichotomy", dichotomy, ""},
          {"monotone_in_c", max_sub < min_super, ""}};
}

inline std::vector<Verdict> run_stationary(const ExperimentConfig& e, const Artifacts& art) {
  const auto r = stationary_relaxation_check(e.sim, e.stationary_window);
  io::json j;
  j["classification"] = to_string(r.classification);
  j["dist_to_zero"] = io::num(r.dist_to_zero);
  j["dist_to_theta"] = io::num(r.dist_to_theta);
  j["t_end"] = r.t_end;
  art.json("stationary.json", j);
  return {{"relaxed_to_constant", r.classification != StationaryClass::neither, to_string(r.classification)}};
}

}  // namespace detail

/// Runs one experiment. Errors propagate as exceptions; map them with exit_code_for.
inline RunOutcome run_experiment(ExperimentConfig e, const RunOptions& opt = {}, std::ostream& log = std::cerr) {
  RunOutcome res;
  res.out_dir = opt.out_dir ? *opt.out_dir : e.out_dir;
  detail::Artifacts art(res.out_dir, e);

  const auto& s = e.sim;
  const auto rep = check_assumptions(s.kernel_plus, s.kernel_minus, s.params,
                                     default_directions(e.dim(), e.dim() == 2 ? 16 : 2));
  art.json("assumptions.json", detail::assumptions_json(rep));
  const auto av = detail::assumption_verdicts(rep);
  for (const auto& v : av)
    if (!v.pass) log << "assumption " << v.name << " fails" << (v.detail.empty() ? "" : ": " + v.detail) << "\n";

  std::vector<Verdict> verdicts;
  if (e.kind == ExperimentKind::check) {
    verdicts = av;
  } else {
    const bool speed_like = e.kind == ExperimentKind::speed || e.kind == ExperimentKind::front_set;
    const bool ok = speed_like ? rep.a1_beta && rep.a3_bounded && rep.a4_all() : rep.dynamics_ok();
    if (!ok) {
      if (!opt.force) throw AssumptionError("required assumptions fail (see assumptions.json); use --force to run anyway");
      log << "continuing despite failed assumptions (--force)\n";
      e.sim.waive_assumptions = true;
    }
    switch (e.kind) {
      case ExperimentKind::speed: verdicts = detail::run_speed(e, art); break;
      case ExperimentKind::front_set: verdicts = detail::run_front_set(e, art); break;
      case ExperimentKind::simulate: verdicts = detail::run_simulate(e, art); break;
      case ExperimentKind::track: verdicts = detail::run_track(e, art); break;
      case ExperimentKind::weinberger: verdicts = detail::run_weinberger(e, art); break;
      case ExperimentKind::stationary: verdicts = detail::run_stationary(e, art); break;
      case ExperimentKind::check: break;
    }
  }
  res.verdicts = verdicts;

  io::json j;
  j["kind"] = to_string(e.kind);
  j["version"] = NKPP_VERSION;
  j["seed"] = e.seed;
  j["forced"] = e.sim.waive_assumptions;
  io::json vs = io::json::array();
  for (const auto& v : verdicts) vs.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["verdicts"] = vs;
  j["pass"] = res.all_pass();
  art.json("summary.json", j);
  res.exit_code = res.all_pass() ? kExitOk : kExitVerdictFailed;
  return res;
}

/// Exit status for an exception escaping run_experiment or config loading.
inline int exit_code_for(const std::exception& ex) {
  if (dynamic_cast<const AssumptionError*>(&ex)) return kExitAssumption;
  if (dynamic_cast<const NumericalError*>(&ex)) return kExitNumerical;
  if (dynamic_cast<const InternalError*>(&ex)) return kExitNumerical;
  if (dynamic_cast<const ConfigError*>(&ex) || dynamic_cast<const DomainError*>(&ex)) return kExitConfig;
  return kExitNumerical;
}

}  // namespace nkpp
