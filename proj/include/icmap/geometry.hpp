#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "icmap/error.hpp"

namespace icmap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double k) { return {a.x * k, a.y * k}; }
  friend constexpr Vec2 operator*(double k, Vec2 a) { return {a.x * k, a.y * k}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 lerp(Vec2 a, Vec2 b, double t) { return a + (b - a) * t; }

// Lexicographic order, used wherever a canonical vertex is needed.
constexpr bool lex_less(Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

using Points = std::vector<Vec2>;

inline constexpr double kCoincidentEps = 1e-9;
// Clip fragments shorter than this are noise slivers at patch borders.
inline constexpr double kMinPieceLength = 0.5;

// Maps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

/// SE(2) pose of the ego frame expressed in the world frame.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_in, double y_in, double theta_in)
      : x(x_in), y(y_in), theta(normalize_angle(theta_in)) {}

  Vec2 translation() const { return {x, y}; }

  Vec2 to_world(Vec2 p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x - s * p.y + x, s * p.x + c * p.y + y};
  }

  Vec2 to_ego(Vec2 p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = p.x - x, dy = p.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }

  // (this ∘ other): first apply other, then this.
  Pose2 compose(const Pose2& other) const {
    const Vec2 t = to_world(other.translation());
    return {t.x, t.y, theta + other.theta};
  }

  Pose2 inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {-(c * x + s * y), s * x - c * y, -theta};
  }
};

enum class Direction { kEgoToWorld, kWorldToEgo };

inline Points transform_points(const Pose2& pose, std::span<const Vec2> points, Direction direction) {
  Points out;
  out.reserve(points.size());
  for (const Vec2& p : points) {
    out.push_back(direction == Direction::kEgoToWorld ? pose.to_world(p) : pose.to_ego(p));
  }
  return out;
}

inline double path_length(std::span<const Vec2> pts, bool closed = false) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  if (closed && pts.size() > 2) len += distance(pts.back(), pts.front());
  return len;
}

inline double signed_area(std::span<const Vec2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) twice += cross(ring[i], ring[(i + 1) % n]);
  return 0.5 * twice;
}

namespace detail {

inline Points drop_consecutive_duplicates(Points pts) {
  Points out;
  out.reserve(pts.size());
  for (const Vec2& p : pts) {
    if (out.empty() || distance(out.back(), p) > kCoincidentEps) out.push_back(p);
  }
  return out;
}

}  // namespace detail

/// Ordered open curve of at least two distinct points.
class Polyline {
 public:
  explicit Polyline(Points pts) : pts_(detail::drop_consecutive_duplicates(std::move(pts))) {
    if (pts_.size() < 2) {
      throw Error(ErrorCode::kDegenerateGeometry, "polyline needs at least two distinct points");
    }
  }

  const Points& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  Vec2 front() const { return pts_.front(); }
  Vec2 back() const { return pts_.back(); }
  double length() const { return path_length(pts_); }

 private:
  Points pts_;
};

/// Implicitly closed ring, stored counter-clockwise without a repeated closing vertex.
class Polygon {
 public:
  explicit Polygon(Points ring) : ring_(detail::drop_consecutive_duplicates(std::move(ring))) {
    while (ring_.size() > 1 && distance(ring_.front(), ring_.back()) <= kCoincidentEps) ring_.pop_back();
    if (ring_.size() < 3) {
      throw Error(ErrorCode::kDegenerateGeometry, "polygon needs at least three distinct vertices");
    }
    const double area = signed_area(ring_);
    if (std::abs(area) <= 1e-12) throw Error(ErrorCode::kDegenerateGeometry, "polygon has zero area");
    if (area < 0) std::reverse(ring_.begin(), ring_.end());
  }

  const Points& ring() const { return ring_; }
  std::size_t size() const { return ring_.size(); }
  double area() const { return signed_area(ring_); }

 private:
  Points ring_;
};

/// Oriented rectangle: half_length along the center heading, half_width across it.
struct Rect {
  Pose2 center;
  double half_length = 1.0;
  double half_width = 1.0;

  Rect() = default;
  Rect(Pose2 c, double hl, double hw) : center(c), half_length(hl), half_width(hw) {
    if (!(hl > 0.0) || !(hw > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rect half extents must be positive");
  }

  Rect expanded(double margin) const { return {center, half_length + margin, half_width + margin}; }

  bool contains(Vec2 world, double eps = 1e-9) const {
    const Vec2 p = center.to_ego(world);
    return std::abs(p.x) <= half_length + eps && std::abs(p.y) <= half_width + eps;
  }

  double area() const { return 4.0 * half_length * half_width; }

  // Counter-clockwise, world frame.
  Points corners() const {
    return {center.to_world({-half_length, -half_width}), center.to_world({half_length, -half_width}),
            center.to_world({half_length, half_width}), center.to_world({-half_length, half_width})};
  }
};

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

/// Symmetric point-set Chamfer: average of the two directed mean nearest-neighbour distances.
inline double chamfer_distance(std::span<const Vec2> p, std::span<const Vec2> q) {
  if (p.empty() || q.empty()) throw Error(ErrorCode::kEmptyPointSet, "chamfer distance of an empty point set");
  auto directed = [](std::span<const Vec2> from, std::span<const Vec2> to) {
    double sum = 0.0;
    for (const Vec2& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& b : to) best = std::min(best, distance(a, b));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(p, q) + directed(q, p));
}

/// Evenly spaced resampling by arc length. Endpoints are preserved exactly.
inline Polyline resample_even(const Polyline& line, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::kInvalidSampleCount, "resample_even requires n >= 2");
  const Points& pts = line.points();
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = cum.back();

  Points out;
  out.reserve(n);
  out.push_back(pts.front());
  std::size_t seg = 1;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 1 < pts.size() && cum[seg] < target) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double t = span > 0.0 ? (target - cum[seg - 1]) / span : 0.0;
    out.push_back(lerp(pts[seg - 1], pts[seg], std::clamp(t, 0.0, 1.0)));
  }
  out.push_back(pts.back());
  return Polyline(std::move(out));
}

/// Points at arc positions 0, h, 2h, ... along the curve, plus the final endpoint.
/// Closed curves are walked back to their first vertex.
inline Points densify(std::span<const Vec2> pts, double spacing, bool closed = false) {
  Points out;
  if (pts.empty()) return out;
  Points path(pts.begin(), pts.end());
  if (closed && path.size() > 2) path.push_back(path.front());
  out.push_back(path.front());
  double carried = 0.0;  // arc length since the last emitted sample
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 a = path[i - 1], b = path[i];
    const double seg = distance(a, b);
    double pos = spacing - carried;
    while (pos < seg) {
      out.push_back(lerp(a, b, pos / seg));
      pos += spacing;
    }
    carried = seg - (pos - spacing);
  }
  if (distance(out.back(), path.back()) > kCoincidentEps) out.push_back(path.back());
  return out;
}

/// A borrowed curve: open polyline or closed ring.
struct CurveRef {
  std::span<const Vec2> points;
  bool closed = false;
};

inline double distance_to_curves(Vec2 p, std::span<const CurveRef> curves) {
  double best = std::numeric_limits<double>::infinity();
  for (const CurveRef& c : curves) {
    const auto& pts = c.points;
    if (pts.size() == 1) best = std::min(best, distance(p, pts[0]));
    for (std::size_t i = 1; i < pts.size(); ++i) best = std::min(best, point_segment_distance(p, pts[i - 1], pts[i]));
    if (c.closed && pts.size() > 2) best = std::min(best, point_segment_distance(p, pts.back(), pts.front()));
  }
  return best;
}

/// Symmetric Chamfer between two curve sets: each side is densified at `spacing`
/// and every sample is measured against the other side's segments. Unlike the
/// raw point-set form this has no sampling-phase floor.
inline double curve_chamfer(std::span<const CurveRef> a, std::span<const CurveRef> b, double spacing) {
  auto directed = [spacing](std::span<const CurveRef> from, std::span<const CurveRef> to) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const CurveRef& c : from) {
      for (const Vec2& p : densify(c.points, spacing, c.closed)) {
        sum += distance_to_curves(p, to);
        ++count;
      }
    }
    if (count == 0) throw Error(ErrorCode::kEmptyPointSet, "curve chamfer of an empty curve set");
    return sum / static_cast<double>(count);
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

inline double curve_chamfer(CurveRef a, CurveRef b, double spacing) {
  return curve_chamfer(std::span<const CurveRef>(&a, 1), std::span<const CurveRef>(&b, 1), spacing);
}

/// Clips a polyline to an oriented rectangle. Returns the maximal connected
/// inside runs with crossing points placed on the boundary; runs shorter than
/// `min_piece_length` are discarded.
inline std::vector<Polyline> clip_polyline_to_rect(const Polyline& line, const Rect& rect,
                                                   double min_piece_length = kMinPieceLength) {
  const Points& pts = line.points();
  std::vector<Polyline> pieces;
  Points current;
  auto flush = [&] {
    Points run = detail::drop_consecutive_duplicates(std::move(current));
    current.clear();
    if (run.size() >= 2 && path_length(run) >= min_piece_length && path_length(run) > 0.0) {
      pieces.emplace_back(std::move(run));
    }
  };

  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec2 a = rect.center.to_ego(pts[i - 1]);
    const Vec2 b = rect.center.to_ego(pts[i]);
    const Vec2 d = b - a;
    // Liang-Barsky against |x| <= hl, |y| <= hw.
    double t0 = 0.0, t1 = 1.0;
    bool visible = true;
    const double p[4] = {-d.x, d.x, -d.y, d.y};
    const double q[4] = {a.x + rect.half_length, rect.half_length - a.x, a.y + rect.half_width,
                         rect.half_width - a.y};
    for (int k = 0; k < 4 && visible; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) visible = false;
      } else {
        const double r = q[k] / p[k];
        if (p[k] < 0.0) {
          if (r > t1) visible = false;
          else if (r > t0) t0 = r;
        } else {
          if (r < t0) visible = false;
          else if (r < t1) t1 = r;
        }
      }
    }
    if (!visible) {
      flush();
      continue;
    }
    const Vec2 start = t0 == 0.0 ? pts[i - 1] : lerp(pts[i - 1], pts[i], t0);
    const Vec2 end = t1 == 1.0 ? pts[i] : lerp(pts[i - 1], pts[i], t1);
    if (t0 > 0.0) flush();
    if (current.empty()) current.push_back(start);
    current.push_back(end);
    if (t1 < 1.0) flush();
  }
  flush();
  return pieces;
}

/// Sutherland-Hodgman clip of a polygon against an oriented rectangle.
/// Returns zero or one polygon.
inline std::vector<Polygon> clip_polygon_to_rect(const Polygon& poly, const Rect& rect) {
  const Points& ring = poly.ring();
  if (std::all_of(ring.begin(), ring.end(), [&](Vec2 p) { return rect.contains(p, 0.0); })) return {poly};

  Points local = transform_points(rect.center, ring, Direction::kWorldToEgo);
  // Each edge keeps points with sign * coord(p) <= limit.
  struct Plane {
    bool use_x;
    double sign;
    double limit;
  };
  const Plane planes[4] = {{true, 1.0, rect.half_length},
                           {true, -1.0, rect.half_length},
                           {false, 1.0, rect.half_width},
                           {false, -1.0, rect.half_width}};
  for (const Plane& pl : planes) {
    if (local.empty()) break;
    auto value = [&](Vec2 p) { return pl.sign * (pl.use_x ? p.x : p.y) - pl.limit; };
    Points next;
    for (std::size_t i = 0, n = local.size(); i < n; ++i) {
      const Vec2 cur = local[i], nxt = local[(i + 1) % n];
      const double vc = value(cur), vn = value(nxt);
      if (vc <= 0.0) next.push_back(cur);
      if ((vc <= 0.0) != (vn <= 0.0)) next.push_back(lerp(cur, nxt, vc / (vc - vn)));
    }
    local = std::move(next);
  }
  local = detail::drop_consecutive_duplicates(std::move(local));
  if (local.size() < 3 || std::abs(signed_area(local)) <= 1e-9) return {};
  return {Polygon(transform_points(rect.center, local, Direction::kEgoToWorld))};
}

}  // namespace icmap
