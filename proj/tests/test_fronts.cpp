#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nkpp/fronts.hpp"

using namespace nkpp;

namespace {

const Direction kRight{1.0};
const Direction kLeft{-1.0};

SimConfig line_config(int n, double L, double lower, const KernelSpec& k, ModelParams p) {
  SimConfig c;
  c.grid = Grid::line(n, L, lower);
  c.params = p;
  c.kernel_plus = k;
  c.kernel_minus = k;
  c.dt = std::min(0.1, c.dt_max());
  c.snapshot_stride = 10;
  return c;
}

// Synthetic trajectory theta 1{x <= v t} on a line.
std::vector<Field> moving_step(double v, double theta) {
  const Grid g = Grid::line(1024, 200.0);
  std::vector<Field> out;
  for (int k = 0; k <= 20; ++k) {
    Field f(g, 0.5 * k);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = g.point(i)[0] <= v * f.t ? theta : 0.0;
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(SampleField, InterpolatesLinearDataExactly) {
  const Grid g = Grid::square(16, 8.0);
  Field f(g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.point(i);
    f.values[i] = 2 * x[0] - x[1] + 1;
  }
  for (const Vec& x : {Vec{0.13, -1.7}, Vec{2.9, 0.4}, Vec{-3.2, 3.1}})
    EXPECT_NEAR(sample_field(f, x), 2 * x[0] - x[1] + 1, 1e-13);
}

TEST(TrackLevelSet, SyntheticStepGivesItsSpeed) {
  const double v = 3.7, h = 200.0 / 1024;
  const auto snaps = moving_step(v, 1.0);
  const auto tr = track_level_set(snaps, kRight, 0.5);
  ASSERT_TRUE(tr.fit.ok);
  EXPECT_NEAR(tr.slope(), v, h);
  for (std::size_t i = 0; i < tr.times.size(); ++i) EXPECT_NEAR(tr.positions[i], v * tr.times[i], h);
  // To the left the level holds up to the domain edge, so nothing is fitted.
  const auto left = track_level_set(snaps, kLeft, 0.5);
  EXPECT_FALSE(left.fit.ok);
}

TEST(TrackLevelSet, ZeroTrajectoryIsEmpty) {
  std::vector<Field> snaps;
  for (int k = 0; k < 10; ++k) snaps.emplace_back(Grid::line(64, 10.0), 1.0 * k);
  const auto tr = track_level_set(snaps, kRight, 0.5);
  EXPECT_TRUE(tr.empty());
  EXPECT_FALSE(tr.fit.ok);
}

TEST(TrackLevelSet, EdgeSnapshotsAreExcludedFromTheFit) {
  // v = 9: the step reaches the domain edge (x = 100) around t = 11.
  const auto tr = track_level_set(moving_step(9.0, 1.0), kRight, 0.5);
  ASSERT_TRUE(tr.fit.ok);
  EXPECT_NEAR(tr.slope(), 9.0, 0.2);
  for (std::size_t i = 0; i < tr.fit.residuals.size(); ++i) EXPECT_LT(std::abs(tr.fit.residuals[i]), 0.2);
}

TEST(TrackLevelSet, LaplaceRunMovesAtTheMinimalSpeed) {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::laplace(2.0);
  auto cfg = line_config(2048, 256.0, -128.0, k, p);
  cfg.initial = InitialCondition::ball(Vec{0.0}, 2.0, 1.0);
  cfg.t_end = 40.0;
  LevelTracker right(kRight, 0.5), left(kLeft, 0.5);
  LevelTracker lo(kRight, 0.1), hi(kRight, 0.9);
  solve(cfg, [&](const Field& f) {
    right(f);
    left(f);
    lo(f);
    hi(f);
  });
  const double c = minimal_speed(k, p, kRight).c_star.value();
  const auto tr = right.finish(), tl = left.finish();
  EXPECT_NEAR(tr.slope(), c, 0.05 * c);
  EXPECT_GT(tr.slope() + tl.slope(), 0.0);
  // Level independence at 0.1 theta, 0.5 theta, 0.9 theta.
  const double s1 = lo.finish().slope(), s9 = hi.finish().slope();
  EXPECT_NEAR(s1, tr.slope(), 0.02 * tr.slope());
  EXPECT_NEAR(s9, tr.slope(), 0.02 * tr.slope());
}

TEST(DecayOutside, CompactDataIsBoundedAtTimeZero) {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::gaussian(1.0);
  const auto sp = minimal_speed(k, p, kRight);
  const Grid g = Grid::line(256, 40.0);
  Field f = InitialCondition::ball(Vec{0.0}, 3.0, 1.0).sample(g);
  const auto r = check_decay_outside({f}, sp, 0.2);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_LE(r.points[0].measured, r.points[0].bound);
  EXPECT_TRUE(r.pass);
}

TEST(DecayOutside, GaussianRunStaysBelowTheBound) {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::gaussian(1.0);
  const auto sp = minimal_speed(k, p, kRight);
  const double lam = *sp.lambda_star;
  // Asymmetric domain: the left-moving front must not reach the seam during the run.
  auto cfg = line_config(4096, 120.0, -80.0, k, p);
  cfg.initial = InitialCondition::plane_wave(kRight, lam, p.theta(), 0.0, -20.0);
  cfg.t_end = 14.0;
  const auto tr = solve(cfg);
  for (double delta : {0.1, 0.3}) {
    const auto r = check_decay_outside(tr.snapshots, sp, delta, 2.0);
    EXPECT_TRUE(r.pass) << "delta=" << delta << " max ratio " << r.max_ratio();
    EXPECT_LE(r.max_ratio(), 1.0);
    EXPECT_FALSE(r.truncated);
  }
}

TEST(DecayOutside, SlowInitialTailBreaksTheBound) {
  // Same amplitude at the origin but decay rate lambda_*/2: the front outruns c_*.
  // The bound uses the norm 1 that data with the fast rate would have.
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::gaussian(1.0);
  const auto sp = minimal_speed(k, p, kRight);
  auto cfg = line_config(4096, 160.0, -60.0, k, p);
  cfg.initial = InitialCondition::plane_wave(kRight, 0.5 * *sp.lambda_star, p.theta(), 0.0, -20.0);
  cfg.t_end = 14.0;
  const auto tr = solve(cfg);
  const auto r = check_decay_outside(tr.snapshots, sp, 0.1, 2.0, 1.0);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_ratio(), 2.0);
}

TEST(ThetaInside, ConstantThetaHasNoDeficit) {
  const auto P = make_polytope(default_directions(2, 8), std::vector<Extended>(8, 1.0));
  std::vector<Field> snaps;
  for (int k = 1; k <= 5; ++k) snaps.emplace_back(Grid::square(32, 20.0), 2.0 * k), snaps.back().values.assign(1024, 0.7);
  const auto r = check_theta_inside(snaps, P, 0.8, 0.7);
  ASSERT_EQ(r.series.size(), 5u);
  EXPECT_EQ(r.final_deficit(), 0.0);
  EXPECT_THROW(check_theta_inside(snaps, P, 1.2, 0.7), DomainError);
}

TEST(ThetaInside, ReducesToTheOriginForSmallShrink) {
  const ModelParams p{2.0, 1.0, 0.5, 0.5};
  const auto k = KernelSpec::gaussian(1.0);
  auto cfg = line_config(1024, 128.0, -64.0, k, p);
  cfg.initial = InitialCondition::ball(Vec{0.0}, 1.0, 0.2);
  cfg.t_end = 15.0;
  const auto P = front_set(k, p, default_directions(1));
  const auto r = check_theta_inside(solve(cfg).snapshots, P, 0.01, p.theta());
  ASSERT_FALSE(r.series.empty());
  EXPECT_LT(r.final_deficit(), 0.05 * p.theta());
}

TEST(ExponentialOutside, ZeroSolutionPassesTrivially) {
  const auto P = make_polytope(default_directions(1), {1.0, 1.0});
  std::vector<Field> snaps;
  for (int k = 0; k < 6; ++k) snaps.emplace_back(Grid::line(64, 40.0), 1.0 * k);
  const auto fit = check_exponential_outside(snaps, GaugeBand{}, P);
  EXPECT_TRUE(fit.trivial);
  EXPECT_TRUE(fit.pass);
}

TEST(ExponentialOutside, SyntheticDecayIsRecovered) {
  const auto P = make_polytope(default_directions(1), {1.0, 1.0});
  const Grid g = Grid::line(512, 100.0);
  std::vector<Field> snaps;
  for (int k = 1; k <= 10; ++k) {
    Field f(g, 2.0 * k);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = std::exp(-0.3 * f.t) * std::exp(-std::abs(g.point(i)[0]) / f.t);
    snaps.push_back(f);
  }
  // sup over the band is at |x| = 1.2 t: e^{-0.3 t - 1.2}, up to grid rounding of the band edge.
  const auto fit = check_exponential_outside(snaps, GaugeBand{1.2, 1.5}, P);
  EXPECT_TRUE(fit.pass);
  EXPECT_NEAR(fit.nu, 0.3, 1e-3);
  EXPECT_NEAR(fit.D, std::exp(-1.2), 1e-2);
}

TEST(ExponentialOutside, LaplaceRunDecaysOnTheDilatedBand) {
  const ModelParams p{2.0, 1.0, 1.0, 0.0};
  const auto k = KernelSpec::laplace(2.0);
  auto cfg = line_config(2048, 256.0, -128.0, k, p);
  cfg.initial = InitialCondition::ball(Vec{0.0}, 2.0, 1.0);
  cfg.t_end = 40.0;
  const auto sp = minimal_speed(k, p, kRight);
  const auto P = front_set(k, p, default_directions(1));
  const double c = sp.c_star.value();
  const auto fit = check_exponential_outside(solve(cfg).snapshots, BoxRegion{Vec{1.2 * c}, Vec{1.5 * c}}, P);
  EXPECT_TRUE(fit.pass) << "nu=" << fit.nu << " r2=" << fit.r2;
  EXPECT_GE(fit.nu, *sp.lambda_star * 0.2 * c * 0.5);
  EXPECT_FALSE(fit.truncated);
}

TEST(Superlinearity, QuadraticTraceIsIncreasing) {
  FrontTrace tr;
  for (int k = 0; k <= 10; ++k) {
    tr.times.push_back(k);
    tr.positions.push_back(0.5 * k * k);
  }
  EXPECT_TRUE(check_superlinear(tr).increasing);
  for (auto& s : tr.positions) s = 3.0 * (&s - tr.positions.data());
  EXPECT_FALSE(check_superlinear(tr).increasing);
}

TEST(LevelPolygon, ScaledPolytopeIndicatorRecoversThePolytope) {
  const ModelParams p{2.0, 1.0, 0.0, 1.0};
  const auto k = KernelSpec::anisotropic_gaussian_2d(1.0, 0.5);
  const auto P = front_set(k, p, default_directions(2, 64));
  const Grid g = Grid::square(512, 120.0);
  const double t = 20.0;
  Field f(g, t);
  for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = P.gauge((1.0 / t) * g.point(i)) <= 1.0 ? 1.0 : 0.0;
  auto poly = level_polygon(f, 0.5, 64);
  ASSERT_EQ(poly.size(), 64u);
  for (auto& v : poly) v = (1.0 / t) * v;
  double cmax = 0;
  for (const auto& o : P.offsets) cmax = std::max(cmax, o.value());
  EXPECT_LT(geom::hausdorff_closed_polylines(poly, P.vertices), 0.02 * cmax);
}

TEST(Stationary, ClassifiesTheTwoConstantStates) {
  const ModelParams p{2.0, 1.0, 0.0, 1.0};
  const auto k = KernelSpec::gaussian(1.0);
  auto cfg = line_config(256, 64.0, -32.0, k, p);
  cfg.t_end = 5.0;
  cfg.initial = InitialCondition::constant(0.0);
  EXPECT_EQ(stationary_relaxation_check(cfg).classification, StationaryClass::converged_to_0);
  cfg.initial = InitialCondition::constant(p.theta());
  EXPECT_EQ(stationary_relaxation_check(cfg).classification, StationaryClass::converged_to_theta);
  cfg.initial = InitialCondition::random(0.25 * p.theta(), 0.75 * p.theta(), 42);
  cfg.t_end = 30.0;
  const auto r = stationary_relaxation_check(cfg);
  EXPECT_EQ(r.classification, StationaryClass::converged_to_theta) << r.dist_to_theta;
  EXPECT_NEAR(r.t_end, 30.0, 1e-9);
}
