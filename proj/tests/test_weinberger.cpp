#include <gtest/gtest.h>

#include <cmath>

#include "nkpp/speed.hpp"
#include "nkpp/weinberger.hpp"

using namespace nkpp;

namespace {

const Direction kRight{1.0};
const Direction kLeft{-1.0};
const ModelParams kParams{2.0, 1.0, 1.0, 0.0};

ReducedKernels laplace_marginals(const Direction& xi = kRight) {
  const auto k = KernelSpec::laplace(2.0);
  return ReducedKernels::along(k, k, xi);
}

double c_star() { return minimal_speed(KernelSpec::laplace(2.0), kParams, kRight).c_star.value(); }

bool nonincreasing(const std::vector<double>& v, int first, int last, double tol) {
  for (int i = first; i < last; ++i)
    if (v[i + 1] > v[i] + tol) return false;
  return true;
}

}  // namespace

TEST(ReducedStep, ThetaIsFixed) {
  const Grid g = Grid::line(512, 64.0);
  const auto out = reduced_step(std::vector<double>(512, kParams.theta()), g, 1.0, laplace_marginals(), kParams);
  for (double v : out) EXPECT_NEAR(v, kParams.theta(), 1e-13);
}

TEST(ReducedStep, ConstantsGrowByTheLogisticMap) {
  const Grid g = Grid::line(512, 64.0);
  const ModelParams p{2.0, 1.0, 0.4, 0.6};
  const double r = 0.3 * p.theta(), T = 1.5;
  const auto out = reduced_step(std::vector<double>(512, r), g, T, laplace_marginals(), p, 0.01);
  const double want = p.theta() / (1.0 + (p.theta() / r - 1.0) * std::exp(-p.beta() * T));
  for (double v : out) EXPECT_NEAR(v, want, 1e-9);
  EXPECT_GT(want, r);
}

TEST(ReducedStep, NonincreasingDataStaysNonincreasing) {
  const Grid g = Grid::line(1024, 128.0);
  std::vector<double> f(1024);
  for (int i = 0; i < 1024; ++i) f[i] = 0.8 / (1.0 + std::exp(g.coord(0, i)));
  const auto out = reduced_step(f, g, 1.0, laplace_marginals(), kParams);
  // The periodic wrap couples the two ends; check away from them.
  EXPECT_TRUE(nonincreasing(out, 200, 820, 1e-12));
}

TEST(Iteration, SeedHasTheRequiredShape) {
  WeinbergerOptions opt;
  IterationState st(laplace_marginals(), kParams, 1.0, 0.5, opt);
  const auto& phi = st.seed_values();
  EXPECT_TRUE(nonincreasing(phi, 0, static_cast<int>(phi.size()) - 1, 0.0));
  EXPECT_EQ(st.seed(0.0), 0.0);
  EXPECT_EQ(st.seed(3.0), 0.0);
  EXPECT_NEAR(st.seed(-50.0), opt.plateau * st.theta(), 1e-15);
  opt.plateau = 1.0;
  EXPECT_THROW(IterationState(laplace_marginals(), kParams, 1.0, 0.5, opt), DomainError);
}

TEST(Iteration, IteratesIncreaseAndStayMonotoneInS) {
  IterationState st(laplace_marginals(), kParams, 1.0, 1.0, {});
  const auto phi = st.values();
  auto prev = phi;
  for (int n = 0; n < 15; ++n) {
    st.update();
    const auto& f = st.values();
    for (int i = st.window_first(); i <= st.window_last(); ++i) {
      EXPECT_GE(f[i], phi[i]);
      EXPECT_GE(f[i], prev[i]);
      EXPECT_LE(f[i], st.theta() * (1 + 1e-12));
      EXPECT_GE(f[i], 0.0);
    }
    EXPECT_TRUE(nonincreasing(f, st.window_first(), st.window_last(), 1e-9 * st.theta()));
    prev = f;
  }
  EXPECT_EQ(st.iterations(), 15);
}

TEST(Iteration, IteratesAreNonincreasingInC) {
  // Both speeds share one s-grid (|c| <= 0.5).
  IterationState a(laplace_marginals(), kParams, 1.0, 0.2, {});
  IterationState b(laplace_marginals(), kParams, 1.0, 0.45, {});
  ASSERT_EQ(a.grid(), b.grid());
  for (int n = 0; n < 20; ++n) {
    a.update();
    b.update();
  }
  for (int i = a.window_first(); i <= a.window_last(); ++i) EXPECT_GE(a.values()[i], b.values()[i] - 1e-12);
}

TEST(Classify, FarRegimes) {
  const double c = c_star();
  const auto k = laplace_marginals();
  const auto hi = classify_speed(1.0, 10 * c, k, kParams);
  EXPECT_EQ(hi.cls, SpeedClass::supercritical);
  EXPECT_LT(hi.tail, 1e-6);
  const auto lo = classify_speed(1.0, -10 * c, k, kParams);
  EXPECT_EQ(lo.cls, SpeedClass::subcritical);
  EXPECT_EQ(classify_speed(1.0, 0.5 * c, k, kParams).cls, SpeedClass::subcritical);
}

TEST(Classify, VeryNegativeSpeedFillsTheWindow) {
  const double c = c_star();
  IterationState st(laplace_marginals(), kParams, 1.0, -10 * c, {});
  for (int n = 0; n < 60; ++n) st.update();
  for (int i = st.window_first(); i <= st.window_last(); ++i) EXPECT_GT(st.values()[i], 0.99 * st.theta());
}

TEST(Classify, SeedIndependence) {
  const double c = c_star();
  const auto k = laplace_marginals();
  WeinbergerOptions low, high;
  low.plateau = 0.3;
  high.plateau = 0.7;
  for (double f : {0.5, 0.7, 1.3, 2.0}) {
    const auto a = classify_speed(1.0, f * c, k, kParams, low);
    const auto b = classify_speed(1.0, f * c, k, kParams, high);
    EXPECT_NE(a.cls, SpeedClass::undecided) << f;
    EXPECT_EQ(a.cls, b.cls) << "c = " << f << " c_*";
    EXPECT_FALSE(a.dichotomy_violation || b.dichotomy_violation);
  }
}

TEST(Classify, BudgetMustBePositive) {
  WeinbergerOptions opt;
  opt.budget = 0;
  EXPECT_THROW(classify_speed(1.0, 1.0, laplace_marginals(), kParams, opt), DomainError);
  EXPECT_THROW(IterationState(laplace_marginals(), kParams, 0.0, 1.0, {}), DomainError);
}

TEST(EstimateCTStar, HalfUnitTimeMatchesMinimalSpeed) {
  const double c = c_star(), T = 0.5;
  const auto est = estimate_cT_star(T, laplace_marginals(), kParams, 0.05 * T);
  ASSERT_TRUE(est.conclusive) << est.diagnostics;
  EXPECT_LE(est.c_hi - est.c_lo, 0.05 * T);
  EXPECT_NEAR(est.speed(), c, 0.1 * c);
  for (const auto& t : est.trials) EXPECT_FALSE(t.dichotomy_violation) << t.c;
  // Classes are monotone in c: every subcritical trial lies below every supercritical one.
  double max_sub = -1e300, min_super = 1e300;
  for (const auto& t : est.trials) {
    if (t.cls == SpeedClass::subcritical) max_sub = std::max(max_sub, t.c);
    if (t.cls == SpeedClass::supercritical) min_super = std::min(min_super, t.c);
  }
  EXPECT_LT(max_sub, min_super);

  // Symmetric kernel: the reflected direction has the same marginal and estimate.
  const auto left = estimate_cT_star(T, laplace_marginals(kLeft), kParams, 0.05 * T);
  ASSERT_TRUE(left.conclusive);
  EXPECT_NEAR(left.midpoint(), est.midpoint(), 0.05 * T);
}
