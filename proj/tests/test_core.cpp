#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nkpp/extended.hpp"
#include "nkpp/polytope.hpp"
#include "nkpp/quadrature.hpp"
#include "nkpp/stats.hpp"
#include "nkpp/vec.hpp"

using namespace nkpp;

TEST(Quadrature, PolynomialIsExact) {
  const auto r = quad::integrate([](double x) { return x * x * x - 2 * x; }, -1.0, 3.0, 1e-14);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 20.0 - 8.0, 1e-12);
}

TEST(Quadrature, KinkAtKnotConvergesFast) {
  const double knots[] = {-1.0, 0.0, 2.0};
  const auto r = quad::integrate_partition([](double x) { return std::abs(x); }, knots, 1e-13);
  EXPECT_NEAR(r.value, 2.5, 1e-13);
  EXPECT_LE(r.intervals, 4);
}

TEST(Quadrature, GaussianOverTheLine) {
  const double none[] = {0.0};
  const auto r = quad::integrate_line([](double x) { return std::exp(-0.5 * (x - 3) * (x - 3)); }, 3.0, 1.0,
                                      std::span<const double>(none, 0), 1e-12);
  EXPECT_NEAR(r.value, std::sqrt(2 * std::numbers::pi), 1e-11);
}

TEST(Quadrature, HeavyTailOverTheLine) {
  // integral of 1/(1+x^2) is pi.
  const double none[] = {0.0};
  const auto r = quad::integrate_line([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0,
                                      std::span<const double>(none, 0), 1e-10);
  EXPECT_NEAR(r.value, std::numbers::pi, 1e-7);
}

TEST(Vec, DirectionRequiresUnitNorm) {
  EXPECT_THROW(Direction(Vec{1.0, 1.0}), DomainError);
  EXPECT_NO_THROW(Direction(Vec{0.6, 0.8}));
  const auto d = Direction::normalized(Vec{3.0, 4.0});
  EXPECT_NEAR(d[0], 0.6, 1e-15);
  EXPECT_THROW(Direction::normalized(Vec{0.0, 0.0}), DomainError);
}

TEST(Vec, DefaultDirectionsAreEquallySpacedUnitVectors) {
  const auto dirs = default_directions(2, 12);
  ASSERT_EQ(dirs.size(), 12u);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    EXPECT_NEAR(dirs[k].vec().norm(), 1.0, 1e-14);
    EXPECT_NEAR(std::atan2(dirs[k][1], dirs[k][0]), std::remainder(2 * std::numbers::pi * k / 12, 2 * std::numbers::pi),
                1e-12);
  }
  const auto one = default_directions(1);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[0][0], 1.0);
  EXPECT_EQ(one[1][0], -1.0);
}

TEST(Extended, OrderingWithInfinity) {
  const Extended inf = Extended::infinity();
  EXPECT_TRUE(Extended(1e300) < inf);
  EXPECT_FALSE(inf < inf);
  EXPECT_TRUE(inf == Extended::infinity());
  EXPECT_TRUE(inf.is_infinite());
  EXPECT_EQ(std::min(inf, Extended(2.0)).value(), 2.0);
}

TEST(Polytope, AxisSquareFromFourHalfPlanes) {
  const auto dirs = default_directions(2, 4);
  const auto P = make_polytope(dirs, {1.0, 1.0, 1.0, 1.0});
  ASSERT_TRUE(P.bounded);
  ASSERT_EQ(P.vertices.size(), 4u);
  for (const auto& v : P.vertices) {
    EXPECT_NEAR(std::abs(v[0]), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(v[1]), 1.0, 1e-12);
  }
  EXPECT_NEAR(P.gauge(Vec{0.5, -0.25}), 0.5, 1e-15);
  EXPECT_TRUE(P.contains(Vec{0.99, 0.99}));
  EXPECT_FALSE(P.contains(Vec{1.01, 0.0}));
  EXPECT_NEAR(P.support(Vec{1.0, 1.0}), 2.0, 1e-12);
}

TEST(Polytope, RegularPolygonVerticesLieOnCircumcircle) {
  const int n = 7;
  const auto dirs = default_directions(2, n);
  std::vector<Extended> c(n, 2.0);
  const auto P = make_polytope(dirs, c);
  ASSERT_TRUE(P.bounded);
  ASSERT_EQ(P.vertices.size(), static_cast<std::size_t>(n));
  const double R = 2.0 / std::cos(std::numbers::pi / n);
  for (const auto& v : P.vertices) EXPECT_NEAR(v.norm(), R, 1e-12);
}

TEST(Polytope, HalfPlaneNormalsDoNotBound) {
  std::vector<Direction> dirs{Direction::from_angle(0.0), Direction::from_angle(1.0), Direction::from_angle(2.0)};
  const auto P = make_polytope(dirs, {1.0, 1.0, 1.0});
  EXPECT_FALSE(P.bounded);
}

TEST(Polytope, InfiniteOffsetsDropOut) {
  const auto dirs = default_directions(2, 4);
  const auto P = make_polytope(dirs, {1.0, Extended::infinity(), 1.0, 1.0});
  EXPECT_FALSE(P.bounded);
  EXPECT_TRUE(P.contains(Vec{0.0, 1e6}));
}

TEST(Polytope, EmptyIntersectionIsAnInternalError) {
  const auto dirs = default_directions(2, 4);
  EXPECT_THROW(make_polytope(dirs, {-1.0, 1.0, -1.0, 1.0}), InternalError);
}

TEST(Polytope, OneDimensionalInterval) {
  const auto P = make_polytope(default_directions(1), {2.0, 0.5});
  ASSERT_TRUE(P.bounded);
  EXPECT_DOUBLE_EQ(P.vertices[0][0], -0.5);
  EXPECT_DOUBLE_EQ(P.vertices[1][0], 2.0);
  EXPECT_DOUBLE_EQ(P.gauge(Vec{-0.25}), 0.5);
}

TEST(Polytope, HausdorffOfNestedSquares) {
  const auto dirs = default_directions(2, 4);
  const auto A = make_polytope(dirs, {1.0, 1.0, 1.0, 1.0});
  const auto B = A.scaled(1.1);
  // Farthest point of the outer square from the inner one is a corner.
  EXPECT_NEAR(geom::hausdorff_closed_polylines(A.vertices, B.vertices), 0.1 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(geom::hausdorff_closed_polylines(A.vertices, A.vertices), 0.0, 1e-15);
}

TEST(Stats, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto f = stats::ols(x, y);
  ASSERT_TRUE(f.ok);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  EXPECT_NEAR(f.slope_ci95, 0.0, 1e-12);
}

TEST(Stats, ThreePointFitAgainstHandComputation) {
  // slope 3/2, intercept -1/6, SSR 1/6, Sxx 2, t_{0.975, 1} = 12.7062047361747.
  const std::vector<double> x{0, 1, 2}, y{0, 1, 3};
  const auto f = stats::ols(x, y);
  EXPECT_NEAR(f.slope, 1.5, 1e-14);
  EXPECT_NEAR(f.intercept, -1.0 / 6.0, 1e-14);
  EXPECT_NEAR(f.slope_stderr, std::sqrt(1.0 / 12.0), 1e-14);
  EXPECT_NEAR(f.slope_ci95, 12.7062047361747 * std::sqrt(1.0 / 12.0), 1e-9);
}

TEST(Stats, DegenerateInputsAreNotOk) {
  const std::vector<double> one{1.0}, same{2, 2, 2}, y{1, 2, 3};
  EXPECT_FALSE(stats::ols(one, one).ok);
  EXPECT_FALSE(stats::ols(same, y).ok);
  EXPECT_THROW(stats::ols(y, one), DomainError);
}

TEST(Stats, ResidualsSumToZero) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(0.1 * i);
    y.push_back(-0.7 * x.back() + 2 + noise(rng));
  }
  const auto f = stats::ols(x, y);
  double s = 0, sx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += f.residuals[i];
    sx += f.residuals[i] * x[i];
  }
  EXPECT_NEAR(s, 0.0, 1e-12);
  EXPECT_NEAR(sx, 0.0, 1e-12);
  EXPECT_NEAR(f.slope, -0.7, 4 * f.slope_stderr);
}
