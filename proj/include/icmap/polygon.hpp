#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "icmap/error.hpp"
#include "icmap/geometry.hpp"

namespace icmap {

inline constexpr double kPolygonEps = 1e-9;

inline double polygon_area(const Polygon& p) { return p.area(); }

/// Crossing-number test; points exactly on the boundary may land either way.
inline bool point_in_ring(Vec2 p, std::span<const Vec2> ring) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Vec2 a = ring[i], b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

inline double distance_to_ring(Vec2 p, std::span<const Vec2> ring) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % n]));
  }
  return best;
}

namespace detail {

inline int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({norm(b - a), norm(c - a), 1.0});
  if (std::abs(v) <= kPolygonEps * scale) return 0;
  return v > 0 ? 1 : -1;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return point_segment_distance(p, a, b) <= kPolygonEps;
}

inline bool segments_touch(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c), o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a), o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  return on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b);
}

}  // namespace detail

/// True when no two non-adjacent edges touch and adjacent edges meet only at their shared vertex.
inline bool is_simple(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = ring[i], b = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 c = ring[j], d = ring[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Folding back onto the previous edge.
        const Vec2 shared = j == i + 1 ? b : a;
        const Vec2 u = (j == i + 1 ? a : b) - shared;
        const Vec2 v = (j == i + 1 ? d : c) - shared;
        if (std::abs(cross(u, v)) <= kPolygonEps * norm(u) * norm(v) && dot(u, v) > 0) return false;
        continue;
      }
      if (detail::segments_touch(a, b, c, d)) return false;
    }
  }
  return true;
}

namespace detail {

struct SplitPoint {
  double t;
  Vec2 p;
};

struct DirectedPiece {
  Vec2 from;
  Vec2 to;
};

// Inserts crossing and overlap points between edge (a0,a1) and (b0,b1) into both split lists.
inline bool split_edges(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1, std::vector<SplitPoint>& sa,
                        std::vector<SplitPoint>& sb) {
  const Vec2 da = a1 - a0, db = b1 - b0;
  const double la = norm(da), lb = norm(db);
  const double denom = cross(da, db);
  auto param_on = [](Vec2 s0, Vec2 d, double len, Vec2 p) { return dot(p - s0, d) / (len * len); };

  if (std::abs(denom) > kPolygonEps * la * lb) {
    const double t = cross(b0 - a0, db) / denom;
    const double u = cross(b0 - a0, da) / denom;
    const double ta = kPolygonEps / la, tb = kPolygonEps / lb;
    if (t < -ta || t > 1 + ta || u < -tb || u > 1 + tb) return false;
    // Evaluated on a canonical ordering of the two edges so swapping the
    // operands reproduces the same point bit for bit.
    auto lo_hi = [](Vec2 p0, Vec2 p1) { return lex_less(p1, p0) ? std::pair{p1, p0} : std::pair{p0, p1}; };
    auto [c0, c1] = lo_hi(a0, a1);
    auto [e0, e1] = lo_hi(b0, b1);
    if (lex_less(e0, c0) || (!lex_less(c0, e0) && lex_less(e1, c1))) {
      std::swap(c0, e0);
      std::swap(c1, e1);
    }
    const Vec2 dc = c1 - c0, de = e1 - e0;
    const double tc = cross(e0 - c0, de) / cross(dc, de), ue = cross(e0 - c0, dc) / cross(dc, de);
    const double sc = kPolygonEps / norm(dc), se = kPolygonEps / norm(de);
    // Snap to an existing vertex so both edges share the exact same coordinates.
    Vec2 p = c0 + dc * tc;
    if (tc <= sc) p = c0;
    else if (tc >= 1 - sc) p = c1;
    else if (ue <= se) p = e0;
    else if (ue >= 1 - se) p = e1;
    sa.push_back({std::clamp(param_on(a0, da, la, p), 0.0, 1.0), p});
    sb.push_back({std::clamp(param_on(b0, db, lb, p), 0.0, 1.0), p});
    return true;
  }
  // Parallel: only collinear overlaps matter.
  if (point_segment_distance(b0, a0 - da * 1e6, a1 + da * 1e6) > kPolygonEps) return false;
  bool any = false;
  for (Vec2 p : {b0, b1}) {
    if (on_segment(a0, a1, p)) {
      sa.push_back({std::clamp(param_on(a0, da, la, p), 0.0, 1.0), p});
      any = true;
    }
  }
  for (Vec2 p : {a0, a1}) {
    if (on_segment(b0, b1, p)) {
      sb.push_back({std::clamp(param_on(b0, db, lb, p), 0.0, 1.0), p});
      any = true;
    }
  }
  return any;
}

inline std::vector<std::vector<SplitPoint>> init_splits(const Points& ring) {
  std::vector<std::vector<SplitPoint>> splits(ring.size());
  for (std::size_t i = 0; i < ring.size(); ++i) {
    splits[i].push_back({0.0, ring[i]});
    splits[i].push_back({1.0, ring[(i + 1) % ring.size()]});
  }
  return splits;
}

inline std::vector<DirectedPiece> pieces_from_splits(std::vector<std::vector<SplitPoint>>& splits) {
  std::vector<DirectedPiece> pieces;
  for (auto& edge : splits) {
    std::stable_sort(edge.begin(), edge.end(), [](const SplitPoint& l, const SplitPoint& r) { return l.t < r.t; });
    for (std::size_t k = 1; k < edge.size(); ++k) {
      if (distance(edge[k - 1].p, edge[k].p) > kPolygonEps) pieces.push_back({edge[k - 1].p, edge[k].p});
    }
  }
  // Collapse split points closer than eps into the earlier one so pieces chain exactly.
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    if (distance(pieces[k - 1].to, pieces[k].from) <= kPolygonEps) pieces[k].from = pieces[k - 1].to;
  }
  return pieces;
}

enum class Side { kInside, kOutside, kSameBoundary, kOppositeBoundary };

inline Side classify(const DirectedPiece& piece, const Points& other) {
  const Vec2 mid = lerp(piece.from, piece.to, 0.5);
  const Vec2 dir = piece.to - piece.from;
  for (std::size_t i = 0, n = other.size(); i < n; ++i) {
    const Vec2 a = other[i], b = other[(i + 1) % n];
    if (point_segment_distance(mid, a, b) <= kPolygonEps &&
        std::abs(cross(dir, b - a)) <= 1e-6 * norm(dir) * norm(b - a)) {
      return dot(dir, b - a) > 0 ? Side::kSameBoundary : Side::kOppositeBoundary;
    }
  }
  return point_in_ring(mid, other) ? Side::kInside : Side::kOutside;
}

inline Points simplify_ring(Points ring) {
  bool changed = true;
  while (changed && ring.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const std::size_t n = ring.size();
      const Vec2 prev = ring[(i + n - 1) % n], cur = ring[i], next = ring[(i + 1) % n];
      if (distance(prev, cur) <= kPolygonEps ||
          (point_segment_distance(cur, prev, next) <= kPolygonEps && dot(cur - prev, next - cur) > 0)) {
        ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  const auto first = std::min_element(ring.begin(), ring.end(), lex_less);
  std::rotate(ring.begin(), first, ring.end());
  return ring;
}

inline double turn_angle(Vec2 incoming, Vec2 outgoing) {
  return std::atan2(cross(incoming, outgoing), dot(incoming, outgoing));
}

// Chains directed pieces into closed loops. At a junction the most clockwise
// continuation is taken.
inline std::vector<Points> chain_loops(const std::vector<DirectedPiece>& pieces) {
  std::vector<bool> used(pieces.size(), false);
  std::vector<Points> loops;
  auto find_next = [&](Vec2 at, Vec2 incoming) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    double best_angle = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      if (used[k] || distance(pieces[k].from, at) > 1e-7) continue;
      const double angle = turn_angle(incoming, pieces[k].to - pieces[k].from);
      if (angle < best_angle) {
        best_angle = angle;
        best = k;
      }
    }
    return best;
  };
  for (std::size_t start = 0; start < pieces.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    Points loop{pieces[start].from};
    Vec2 at = pieces[start].to;
    Vec2 incoming = pieces[start].to - pieces[start].from;
    while (distance(at, pieces[start].from) > 1e-7) {
      loop.push_back(at);
      const auto next = find_next(at, incoming);
      if (!next) break;
      used[*next] = true;
      incoming = pieces[*next].to - pieces[*next].from;
      at = pieces[*next].to;
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace detail

/// Outer boundary of a ∪ b, or std::nullopt when the two polygons are fully
/// disjoint (caller decides what a disjoint pair means).
inline std::optional<Polygon> polygon_union(const Polygon& a, const Polygon& b) {
  if (!is_simple(a.ring())) throw Error(ErrorCode::kNonSimplePolygon, "first union operand is not simple");
  if (!is_simple(b.ring())) throw Error(ErrorCode::kNonSimplePolygon, "second union operand is not simple");

  const Points& ra = a.ring();
  const Points& rb = b.ring();
  auto sa = detail::init_splits(ra);
  auto sb = detail::init_splits(rb);
  bool touching = false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    for (std::size_t j = 0; j < rb.size(); ++j) {
      touching |= detail::split_edges(ra[i], ra[(i + 1) % ra.size()], rb[j], rb[(j + 1) % rb.size()], sa[i], sb[j]);
    }
  }

  if (!touching) {
    if (point_in_ring(rb.front(), ra)) return a;
    if (point_in_ring(ra.front(), rb)) return b;
    return std::nullopt;
  }

  std::vector<detail::DirectedPiece> kept;
  for (const auto& piece : detail::pieces_from_splits(sa)) {
    const auto side = detail::classify(piece, rb);
    if (side == detail::Side::kOutside || side == detail::Side::kSameBoundary) kept.push_back(piece);
  }
  for (const auto& piece : detail::pieces_from_splits(sb)) {
    if (detail::classify(piece, ra) == detail::Side::kOutside) kept.push_back(piece);
  }

  auto loops = detail::chain_loops(kept);
  if (loops.empty()) return a;
  const auto outer = std::max_element(loops.begin(), loops.end(), [](const Points& l, const Points& r) {
    return signed_area(l) < signed_area(r);
  });
  return Polygon(detail::simplify_ring(std::move(*outer)));
}

/// Counts cells of a resolution×resolution grid over [lo, hi] whose centers lie
/// inside any of the polygons. Test oracle.
inline std::size_t rasterize_count(std::span<const Polygon> polys, Vec2 lo, Vec2 hi, int resolution) {
  if (resolution < 100) throw Error(ErrorCode::kInvalidArgument, "rasterization resolution must be >= 100");
  const double dx = (hi.x - lo.x) / resolution, dy = (hi.y - lo.y) / resolution;
  std::size_t count = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = lo.y + (iy + 0.5) * dy;
    for (int ix = 0; ix < resolution; ++ix) {
      const Vec2 c{lo.x + (ix + 0.5) * dx, y};
      for (const Polygon& p : polys) {
        if (point_in_ring(c, p.ring())) {
          ++count;
          break;
        }
      }
    }
  }
  return count;
}

}  // namespace icmap
