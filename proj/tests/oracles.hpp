#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Deliberately brute force: none of these call into the library's algorithms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "icmap/geometry.hpp"

namespace oracle {

using icmap::Points;
using icmap::Vec2;

inline double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double brute_chamfer(const Points& p, const Points& q) {
  auto directed = [](const Points& from, const Points& to) {
    double sum = 0.0;
    for (const Vec2& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& b : to) best = std::min(best, dist(a, b));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(p, q) + directed(q, p));
}

inline double polyline_length(const Points& pts) {
  double l = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) l += dist(pts[i - 1], pts[i]);
  return l;
}

inline Vec2 point_at_arc_length(const Points& pts, double s) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = dist(pts[i - 1], pts[i]);
    if (s <= seg || i + 1 == pts.size()) {
      const double t = seg > 0 ? std::clamp(s / seg, 0.0, 1.0) : 0.0;
      return {pts[i - 1].x + t * (pts[i].x - pts[i - 1].x), pts[i - 1].y + t * (pts[i].y - pts[i - 1].y)};
    }
    s -= seg;
  }
  return pts.back();
}

// Length of the part of a polyline inside `rect`, by midpoint sampling of `steps` arc-length cells.
inline double inside_length(const Points& pts, const icmap::Rect& rect, int steps) {
  const double total = polyline_length(pts);
  int inside = 0;
  for (int k = 0; k < steps; ++k) {
    if (rect.contains(point_at_arc_length(pts, total * (k + 0.5) / steps), 0.0)) ++inside;
  }
  return total * inside / steps;
}

inline bool inside_ring(Vec2 p, const Points& ring) {
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Vec2 a = ring[i], b = ring[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

// Area covered by `inside` over [lo, hi], counting centers of a res x res grid.
inline double raster_area(Vec2 lo, Vec2 hi, int res, const std::function<bool(Vec2)>& inside) {
  const double dx = (hi.x - lo.x) / res, dy = (hi.y - lo.y) / res;
  long count = 0;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      if (inside({lo.x + (ix + 0.5) * dx, lo.y + (iy + 0.5) * dy})) ++count;
    }
  }
  return static_cast<double>(count) * dx * dy;
}

// Convex quad: four sorted angles around `center` with radii in [r0, r1].
inline Points random_convex_quad(std::mt19937_64& rng, Vec2 center, double r0, double r1) {
  std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi), rad(r0, r1);
  for (;;) {
    std::vector<double> a{ang(rng), ang(rng), ang(rng), ang(rng)};
    std::sort(a.begin(), a.end());
    Points q;
    for (double t : a) {
      const double r = rad(rng);
      q.push_back({center.x + r * std::cos(t), center.y + r * std::sin(t)});
    }
    bool convex = true;
    for (int i = 0; i < 4; ++i) {
      const Vec2 p0 = q[i], p1 = q[(i + 1) % 4], p2 = q[(i + 2) % 4];
      const double c = (p1.x - p0.x) * (p2.y - p1.y) - (p1.y - p0.y) * (p2.x - p1.x);
      if (c <= 1e-3) convex = false;
    }
    if (convex) return q;
  }
}

// Best total over all partial one-to-one assignments restricted to eligible pairs.
// Sums are accumulated in row order so equal assignments give bit-identical totals.
inline double brute_best_assignment(const std::vector<std::vector<double>>& score,
                                    const std::vector<std::vector<bool>>& eligible) {
  const std::size_t rows = score.size(), cols = rows ? score[0].size() : 0;
  std::vector<bool> used(cols, false);
  double best = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t r, double acc) {
    if (r == rows) {
      best = std::max(best, acc);
      return;
    }
    rec(r + 1, acc);
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c] || !eligible[r][c]) continue;
      used[c] = true;
      rec(r + 1, acc + score[r][c]);
      used[c] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

// Algebraic (Kasa) circle fit; returns the radius.
inline double fit_circle_radius(const Points& pts) {
  Eigen::MatrixXd a(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    a(i, 0) = pts[i].x;
    a(i, 1) = pts[i].y;
    a(i, 2) = 1.0;
    b(i) = -(pts[i].x * pts[i].x + pts[i].y * pts[i].y);
  }
  const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
  const double cx = -s(0) / 2, cy = -s(1) / 2;
  return std::sqrt(cx * cx + cy * cy - s(2));
}

inline bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x); };
  const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// True if any two non-adjacent segments properly cross.
inline bool self_intersects(const Points& pts) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (std::size_t j = i + 2; j + 1 < pts.size(); ++j) {
      if (segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1])) return true;
    }
  }
  return false;
}

// Cyclic rotation equality of two rings.
inline bool same_ring_up_to_rotation(const Points& a, const Points& b, double tol = 0.0) {
  if (a.size() != b.size()) return false;
  for (std::size_t shift = 0; shift < a.size(); ++shift) {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) ok = dist(a[i], b[(i + shift) % b.size()]) <= tol;
    if (ok) return true;
  }
  return false;
}

}  // namespace oracle
