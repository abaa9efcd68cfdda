#pragma once

// Convex sets given as intersections of half-spaces {x : x.xi_i <= c_i}.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/extended.hpp"
#include "nkpp/vec.hpp"

namespace nkpp {

/// Intersection of half-spaces x.xi_i <= offsets_i. Infinite offsets impose
/// no constraint. In 2D `vertices` is the counter-clockwise boundary polygon;
/// in 1D it holds the two interval endpoints. Both are empty when unbounded.
struct FrontPolytope {
  int dim = 1;
  std::vector<Direction> directions;
  std::vector<Extended> offsets;
  bool bounded = false;
  std::vector<Vec> vertices;

  bool contains(const Vec& x, double tol = 0.0) const {
    for (std::size_t i = 0; i < directions.size(); ++i) {
      if (offsets[i].is_finite() && directions[i].dot(x) > offsets[i].value() + tol) return false;
    }
    return true;
  }

  /// Minkowski gauge: smallest t >= 0 with x in t * (this set). Requires 0 in
  /// the interior; +inf along directions where the set is unbounded.
  double gauge(const Vec& x) const {
    double g = 0;
    for (std::size_t i = 0; i < directions.size(); ++i) {
      if (!offsets[i].is_finite()) continue;
      if (!(offsets[i].value() > 0)) throw DomainError("gauge: origin is not an interior point");
      g = std::max(g, directions[i].dot(x) / offsets[i].value());
    }
    return g;
  }

  /// The dilated set s * (this set), s > 0.
  FrontPolytope scaled(double s) const {
    FrontPolytope out = *this;
    for (auto& o : out.offsets) {
      if (o.is_finite()) o = s * o.value();
    }
    for (auto& v : out.vertices) v = s * v;
    return out;
  }

  /// Largest value of x.xi over the vertices (support function of the polygon).
  double support(const Vec& xi) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : vertices) best = std::max(best, v.dot(xi));
    return best;
  }
};

namespace geom {

inline double cross(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

/// True when the finite normals leave no angular gap of size >= pi, i.e. the
/// 2D intersection is bounded.
inline bool normals_cover_circle(std::vector<double> angles) {
  if (angles.size() < 3) return false;
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
  return gap < std::numbers::pi - 1e-12;
}

/// Counter-clockwise vertices of the bounded polygon {x : n_i.x <= c_i}, by
/// angular sort and a deque sweep. Throws InternalError if the set is empty.
inline std::vector<Vec> half_plane_intersection(const std::vector<Vec>& normals, const std::vector<double>& c) {
  struct Line {
    Vec n;
    double c;
    double angle;
    Vec point() const { return c * n; }
    Vec dir() const { return Vec{-n[1], n[0]}; }
  };
  std::vector<Line> lines;
  double scale = 0;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    lines.push_back({normals[i], c[i], std::atan2(normals[i][1], normals[i][0])});
    scale = std::max(scale, std::abs(c[i]));
  }
  const double tol = 1e-12 * (1.0 + scale);
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.angle != b.angle ? a.angle < b.angle : a.c < b.c;
  });
  // Keep the tightest of parallel lines.
  std::vector<Line> uniq;
  for (const auto& l : lines) {
    if (!uniq.empty() && std::abs(l.angle - uniq.back().angle) < 1e-14) continue;
    uniq.push_back(l);
  }
  auto intersect = [](const Line& a, const Line& b) {
    const double det = a.n[0] * b.n[1] - a.n[1] * b.n[0];
    if (std::abs(det) < 1e-300) throw InternalError("half_plane_intersection: parallel neighbouring lines");
    return Vec{(a.c * b.n[1] - b.c * a.n[1]) / det, (a.n[0] * b.c - b.n[0] * a.c) / det};
  };
  auto inside = [&](const Line& l, const Vec& x) { return l.n.dot(x) <= l.c + tol; };

  std::deque<Line> dq;
  for (const auto& l : uniq) {
    while (dq.size() >= 2 && !inside(l, intersect(dq[dq.size() - 2], dq.back()))) dq.pop_back();
    while (dq.size() >= 2 && !inside(l, intersect(dq[0], dq[1]))) dq.pop_front();
    dq.push_back(l);
  }
  while (dq.size() >= 3 && !inside(dq.front(), intersect(dq[dq.size() - 2], dq.back()))) dq.pop_back();
  while (dq.size() >= 3 && !inside(dq.back(), intersect(dq[0], dq[1]))) dq.pop_front();
  if (dq.size() < 3) throw InternalError("half_plane_intersection: empty intersection");

  std::vector<Vec> out;
  for (std::size_t i = 0; i < dq.size(); ++i) out.push_back(intersect(dq[i], dq[(i + 1) % dq.size()]));
  for (const auto& v : out) {
    for (const auto& l : uniq) {
      if (!inside(l, v)) throw InternalError("half_plane_intersection: inconsistent vertex");
    }
  }
  return out;
}

inline double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline double distance_to_closed_polyline(const Vec& p, const std::vector<Vec>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i)
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  return best;
}

/// Hausdorff distance between the closed polylines A and B, with each edge
/// sampled at `samples_per_edge` points.
inline double hausdorff_closed_polylines(const std::vector<Vec>& A, const std::vector<Vec>& B,
                                         int samples_per_edge = 32) {
  if (A.empty() || B.empty()) return std::numeric_limits<double>::infinity();
  auto one_sided = [&](const std::vector<Vec>& P, const std::vector<Vec>& Q) {
    double worst = 0;
    for (std::size_t i = 0; i < P.size(); ++i) {
      const Vec& a = P[i];
      const Vec& b = P[(i + 1) % P.size()];
      for (int k = 0; k < samples_per_edge; ++k) {
        const double t = static_cast<double>(k) / samples_per_edge;
        worst = std::max(worst, distance_to_closed_polyline(a + t * (b - a), Q));
      }
    }
    return worst;
  };
  return std::max(one_sided(A, B), one_sided(B, A));
}

}  // namespace geom

/// Builds the intersection polytope for given directions and offsets.
inline FrontPolytope make_polytope(const std::vector<Direction>& dirs, const std::vector<Extended>& offsets) {
  if (dirs.empty() || dirs.size() != offsets.size()) throw DomainError("make_polytope: directions/offsets mismatch");
  FrontPolytope P;
  P.dim = dirs.front().dim();
  P.directions = dirs;
  P.offsets = offsets;
  if (P.dim == 1) {
    Extended hi = Extended::infinity(), lo = Extended::infinity();  // x <= hi, -x <= lo
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      if (!offsets[i].is_finite()) continue;
      if (dirs[i][0] > 0) hi = std::min(hi, offsets[i]);
      else lo = std::min(lo, offsets[i]);
    }
    P.bounded = hi.is_finite() && lo.is_finite();
    if (P.bounded) {
      if (-lo.value() > hi.value()) throw InternalError("front set is empty");
      P.vertices = {Vec{-lo.value()}, Vec{hi.value()}};
    }
    return P;
  }
  if (P.dim != 2) return P;  // membership only
  std::vector<Vec> normals;
  std::vector<double> c;
  std::vector<double> angles;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (!offsets[i].is_finite()) continue;
    normals.push_back(dirs[i].vec());
    c.push_back(offsets[i].value());
    angles.push_back(std::atan2(dirs[i][1], dirs[i][0]));
  }
  P.bounded = geom::normals_cover_circle(angles);
  if (P.bounded) P.vertices = geom::half_plane_intersection(normals, c);
  return P;
}

}  // namespace nkpp
