#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "icmap/error.hpp"
#include "icmap/geometry.hpp"

namespace icmap {

/// Knobs for the penalized least-squares spline used when merging polylines.
struct SmoothingFitParams {
  double s = 0.5;               // weight of the second-difference penalty on control points
  int degree = 3;               // 2 or 3
  double out_spacing = 1.0;     // meters between output points
  int min_points = 20;          // lower bound on output point count
  double control_spacing = 2.0; // meters of chord length per control point
  int control_points = 0;       // > 0 overrides control_spacing

  void validate() const {
    if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothing weight s must be >= 0");
    if (degree != 2 && degree != 3) throw Error(ErrorCode::kInvalidArgument, "spline degree must be 2 or 3");
    if (!(out_spacing > 0.0)) throw Error(ErrorCode::kInvalidArgument, "out_spacing must be positive");
    if (!(control_spacing > 0.0)) throw Error(ErrorCode::kInvalidArgument, "control_spacing must be positive");
    if (min_points < 2) throw Error(ErrorCode::kInvalidArgument, "min_points must be >= 2");
  }
};

namespace detail {

// Penalty rows are scaled by s * 10 * (data points per control point).
inline constexpr double kPenaltyScale = 10.0;


// Greedy nearest-neighbour walk, then 2-opt reversals and single-point
// relocations until the open path stops getting shorter.
inline std::vector<std::size_t> chain_order(const Points& pts, std::size_t start) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> order{start};
  std::vector<bool> used(n, false);
  used[start] = true;
  for (std::size_t step = 1; step < n; ++step) {
    const Vec2 at = pts[order.back()];
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (used[k]) continue;
      const double d = distance(at, pts[k]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    used[best] = true;
    order.push_back(best);
  }

  auto d = [&](std::size_t a, std::size_t b) { return distance(pts[order[a]], pts[order[b]]); };
  for (int pass = 0; pass < 100; ++pass) {
    bool improved = false;
    for (std::size_t i = 1; i + 1 < order.size(); ++i) {
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        // Reverse order[i..j]; for the tail only the entry edge changes.
        const bool tail = j + 1 == order.size();
        const double before = d(i - 1, i) + (tail ? 0.0 : d(j, j + 1));
        const double after = d(i - 1, j) + (tail ? 0.0 : d(i, j + 1));
        if (after < before - 1e-9) {
          std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          improved = true;
        }
      }
    }
    for (std::size_t i = 1; i < order.size(); ++i) {
      // Gain of removing order[i] (the start point stays fixed).
      const bool last = i + 1 == order.size();
      const double removal_gain = last ? d(i - 1, i) : d(i - 1, i) + d(i, i + 1) - d(i - 1, i + 1);
      const Vec2 p = pts[order[i]];
      double best_cost = removal_gain - 1e-9;
      std::size_t best_pos = i;
      for (std::size_t j = 0; j + 1 < order.size(); ++j) {
        if (j == i || j + 1 == i) continue;
        const Vec2 a = pts[order[j]], b = pts[order[j + 1]];
        const double cost = distance(a, p) + distance(p, b) - distance(a, b);
        if (cost < best_cost) {
          best_cost = cost;
          best_pos = j + 1;
        }
      }
      if (!last && distance(pts[order.back()], p) < best_cost) {
        best_cost = distance(pts[order.back()], p);
        best_pos = order.size();
      }
      if (best_pos != i) {
        const std::size_t moved = order[i];
        order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
        if (best_pos > i) --best_pos;
        order.insert(order.begin() + static_cast<std::ptrdiff_t>(best_pos), moved);
        improved = true;
      }
    }
    if (!improved) break;
  }
  return order;
}

// Knot span index for parameter u (NURBS book A2.1).
inline std::size_t find_span(std::size_t n_ctrl, int degree, double u, const std::vector<double>& knots) {
  const std::size_t p = static_cast<std::size_t>(degree);
  if (u >= knots[n_ctrl]) return n_ctrl - 1;
  if (u <= knots[p]) return p;
  std::size_t low = p, high = n_ctrl;
  std::size_t mid = (low + high) / 2;
  while (u < knots[mid] || u >= knots[mid + 1]) {
    if (u < knots[mid]) high = mid;
    else low = mid;
    mid = (low + high) / 2;
  }
  return mid;
}

// Non-vanishing basis functions at u (NURBS book A2.2).
inline std::vector<double> basis_funs(std::size_t span, double u, int degree, const std::vector<double>& knots) {
  const std::size_t p = static_cast<std::size_t>(degree);
  std::vector<double> basis(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  basis[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = u - knots[span + 1 - j];
    right[j] = knots[span + j] - u;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? basis[r] / denom : 0.0;
      basis[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    basis[j] = saved;
  }
  return basis;
}

// Clamped knot vector. Averaging when interpolating, the de Boor style
// placement otherwise; both keep every span supported by data.
inline std::vector<double> make_knots(const std::vector<double>& params, std::size_t n_ctrl, int degree) {
  const std::size_t p = static_cast<std::size_t>(degree);
  const std::size_t n_data = params.size();
  std::vector<double> knots(n_ctrl + p + 1, 0.0);
  for (std::size_t k = n_ctrl; k < knots.size(); ++k) knots[k] = 1.0;
  const std::size_t interior = n_ctrl - p - 1;
  if (n_ctrl == n_data) {
    for (std::size_t j = 1; j <= interior; ++j) {
      double sum = 0.0;
      for (std::size_t i = j; i < j + p; ++i) sum += params[i];
      knots[j + p] = sum / static_cast<double>(p);
    }
  } else {
    const double d = static_cast<double>(n_data) / static_cast<double>(n_ctrl - p);
    for (std::size_t j = 1; j <= interior; ++j) {
      const double jd = static_cast<double>(j) * d;
      const auto i = static_cast<std::size_t>(std::floor(jd));
      const double alpha = jd - static_cast<double>(i);
      knots[j + p] = (1.0 - alpha) * params[i - 1] + alpha * params[std::min(i, n_data - 1)];
    }
  }
  return knots;
}

}  // namespace detail

/// Orients the detection along the global chord and chains all points of both
/// inputs into one ordered path, starting from the end of the farthest-apart
/// pair that lies first along the global direction.
inline Points reorder_concat(const Polyline& global_pts, const Polyline& det_pts) {
  const Vec2 g_chord = global_pts.back() - global_pts.front();
  Points det = det_pts.points();
  if (dot(det.back() - det.front(), g_chord) < 0.0) std::reverse(det.begin(), det.end());

  Points all = global_pts.points();
  all.insert(all.end(), det.begin(), det.end());

  std::size_t ea = 0, eb = 0;
  double far = -1.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      const double d = distance(all[i], all[j]);
      if (d > far) {
        far = d;
        ea = i;
        eb = j;
      }
    }
  }
  // Direction reference: the global chord, or the detection chord if the global one is degenerate.
  Vec2 ref = g_chord;
  if (norm(ref) <= kCoincidentEps) ref = det.back() - det.front();
  const std::size_t start = dot(all[eb] - all[ea], ref) >= 0.0 ? ea : eb;

  const auto order = detail::chain_order(all, start);
  Points out;
  out.reserve(all.size());
  for (std::size_t k : order) out.push_back(all[k]);
  return out;
}

/// Least-squares clamped B-spline over chord-length parameters, ends fixed to the
/// first and last input points, minimizing
/// sum |C(u_i) - p_i|^2 + 10s * (n/m) * sum |divided second difference of control points|^2,
/// then resampled evenly at out_spacing.
inline Polyline fit_smoothing_spline(std::span<const Vec2> input, const SmoothingFitParams& params) {
  params.validate();
  const Points pts = detail::drop_consecutive_duplicates(Points(input.begin(), input.end()));
  const std::size_t p = static_cast<std::size_t>(params.degree);
  const std::size_t n = pts.size();
  if (n < p + 1) throw Error(ErrorCode::kInsufficientPoints, "spline fit needs at least degree+1 distinct points");

  std::vector<double> u(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) u[i] = u[i - 1] + distance(pts[i - 1], pts[i]);
  const double chord = u.back();
  for (double& v : u) v /= chord;
  u.back() = 1.0;

  std::size_t m = params.control_points > 0
                      ? static_cast<std::size_t>(params.control_points)
                      : static_cast<std::size_t>(std::ceil(chord / params.control_spacing)) + 1;
  m = std::clamp(m, p + 1, n);
  const auto knots = detail::make_knots(u, m, params.degree);

  const std::size_t penalty_rows = m >= 3 ? m - 2 : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + penalty_rows), static_cast<Eigen::Index>(m));
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(a.rows(), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t span = detail::find_span(m, params.degree, u[i], knots);
    const auto basis = detail::basis_funs(span, u[i], params.degree, knots);
    for (std::size_t r = 0; r <= p; ++r) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(span - p + r)) = basis[r];
    rhs(static_cast<Eigen::Index>(i), 0) = pts[i].x;
    rhs(static_cast<Eigen::Index>(i), 1) = pts[i].y;
  }
  if (params.s > 0.0 && penalty_rows > 0) {
    // Second differences divided by Greville spacing, so a straight line costs nothing.
    std::vector<double> greville(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 1; j <= p; ++j) greville[k] += knots[k + j];
      greville[k] /= static_cast<double>(p);
    }
    const double mean_gap = 1.0 / static_cast<double>(m - 1);
    const double w = std::sqrt(params.s * static_cast<double>(n) / static_cast<double>(m) * detail::kPenaltyScale);
    for (std::size_t k = 0; k < penalty_rows; ++k) {
      const auto row = static_cast<Eigen::Index>(n + k);
      const double lo = mean_gap / (greville[k + 1] - greville[k]);
      const double hi = mean_gap / (greville[k + 2] - greville[k + 1]);
      a(row, static_cast<Eigen::Index>(k)) = w * lo;
      a(row, static_cast<Eigen::Index>(k + 1)) = -w * (lo + hi);
      a(row, static_cast<Eigen::Index>(k + 2)) = w * hi;
    }
  }
  // End control points are pinned to the path ends; the interior is solved for.
  Eigen::MatrixXd ctrl(static_cast<Eigen::Index>(m), 2);
  ctrl.row(0) << pts.front().x, pts.front().y;
  ctrl.row(static_cast<Eigen::Index>(m - 1)) << pts.back().x, pts.back().y;
  const auto last = static_cast<Eigen::Index>(m - 1);
  rhs -= a.col(0) * ctrl.row(0) + a.col(last) * ctrl.row(last);
  ctrl.middleRows(1, last - 1) = a.middleCols(1, last - 1).colPivHouseholderQr().solve(rhs);

  // Dense evaluation, then even resampling by arc length.
  const std::size_t dense = std::max({std::size_t{400}, 16 * m,
                                      static_cast<std::size_t>(std::ceil(4.0 * chord / params.out_spacing)) + 1});
  Points curve;
  curve.reserve(dense);
  for (std::size_t k = 0; k < dense; ++k) {
    const double uk = static_cast<double>(k) / static_cast<double>(dense - 1);
    const std::size_t span = detail::find_span(m, params.degree, uk, knots);
    const auto basis = detail::basis_funs(span, uk, params.degree, knots);
    Vec2 c{};
    for (std::size_t r = 0; r <= p; ++r) {
      const auto idx = static_cast<Eigen::Index>(span - p + r);
      c = c + Vec2{ctrl(idx, 0), ctrl(idx, 1)} * basis[r];
    }
    curve.push_back(c);
  }
  const Polyline dense_line(std::move(curve));
  const auto count = std::max<std::size_t>(static_cast<std::size_t>(params.min_points),
                                           static_cast<std::size_t>(std::lround(dense_line.length() / params.out_spacing)) + 1);
  return resample_even(dense_line, count);
}

/// Reorder, concatenate, fit and resample.
inline Polyline merge_polylines(const Polyline& global_pts, const Polyline& det_pts, const SmoothingFitParams& params) {
  return fit_smoothing_spline(reorder_concat(global_pts, det_pts), params);
}

}  // namespace icmap
