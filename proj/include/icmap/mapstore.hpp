#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icmap/curvefit.hpp"
#include "icmap/error.hpp"
#include "icmap/geometry.hpp"
#include "icmap/instance.hpp"
#include "icmap/polygon.hpp"

namespace icmap {

struct MapEntry {
  MapInstance instance;  // world frame, no score
  int last_update = 0;
};

/// The maintained global map, keyed by instance id.
struct GlobalMap {
  std::map<InstanceId, MapEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool contains(InstanceId id) const { return entries.count(id) != 0; }

  std::vector<MapInstance> instances() const {
    std::vector<MapInstance> out;
    out.reserve(entries.size());
    for (const auto& [id, e] : entries) out.push_back(e.instance);
    return out;
  }

  friend bool operator==(const GlobalMap& a, const GlobalMap& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (auto ia = a.entries.begin(), ib = b.entries.begin(); ia != a.entries.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.last_update != ib->second.last_update) return false;
      const MapInstance &x = ia->second.instance, &y = ib->second.instance;
      if (x.cls != y.cls || x.points != y.points || x.id != y.id) return false;
    }
    return true;
  }
};

/// Sampled historical points keyed by instance id (world frame).
using SampledHistory = std::map<InstanceId, Points>;

/// Expands the patch on every side, intersects each requested instance with
/// it and resamples the longest intersection piece to n_sample points.
/// Rings are clipped as closed curves.
inline SampledHistory sample_history(const GlobalMap& map, const Rect& patch, double expand,
                                     std::span<const InstanceId> ids, std::size_t n_sample) {
  if (expand < 0.0) throw Error(ErrorCode::kInvalidArgument, "patch expansion must be >= 0");
  if (n_sample < 2) throw Error(ErrorCode::kInvalidSampleCount, "n_sample must be >= 2");
  const Rect expanded = patch.expanded(expand);
  SampledHistory out;
  for (InstanceId id : ids) {
    const auto it = map.entries.find(id);
    if (it == map.entries.end()) continue;
    const MapInstance& inst = it->second.instance;
    Points path = inst.points;
    if (inst.is_polygon()) path.push_back(path.front());
    const auto pieces = clip_polyline_to_rect(Polyline(std::move(path)), expanded);
    if (pieces.empty()) continue;
    const auto longest = std::max_element(pieces.begin(), pieces.end(), [](const Polyline& a, const Polyline& b) {
      return a.length() < b.length();
    });
    out.emplace(id, resample_even(*longest, n_sample).points());
  }
  return out;
}

/// Nearest-neighbour convex blend toward the sampled history. Points without a
/// history sample inside `radius` are left alone; point count never changes.
inline MapInstance fuse_with_history(const MapInstance& det, std::span<const Vec2> history, double radius,
                                     double weight) {
  if (weight < 0.0 || weight > 1.0) throw Error(ErrorCode::kInvalidArgument, "fusion weight must lie in [0,1]");
  MapInstance out = det;
  if (history.empty() || det.is_polygon()) return out;
  for (Vec2& p : out.points) {
    const Vec2* nearest = nullptr;
    double best = radius;
    for (const Vec2& h : history) {
      const double d = distance(p, h);
      if (d <= best) {
        best = d;
        nearest = &h;
      }
    }
    if (nearest) p = (1.0 - weight) * p + weight * *nearest;
  }
  return out;
}

enum class MergeOutcome { kInserted, kCurveFit, kPolygonUnion, kReplacedDisjoint };

/// Class-dispatched update of one matched instance: new ids are inserted,
/// polylines are refit together with the stored geometry, crossings are unioned.
/// A disjoint crossing pair under the same id is replaced by the detection.
inline MergeOutcome merge_instance(GlobalMap& map, const MapInstance& det, int frame, const SmoothingFitParams& params) {
  if (!det.id) throw Error(ErrorCode::kInvalidArgument, "merged instance needs an id");
  MapInstance clean = det;
  clean.score = 1.0;
  clean.embedding.reset();

  auto it = map.entries.find(*det.id);
  if (it == map.entries.end()) {
    map.entries.emplace(*det.id, MapEntry{std::move(clean), frame});
    return MergeOutcome::kInserted;
  }
  MapEntry& entry = it->second;
  if (entry.instance.cls != det.cls) {
    throw Error(ErrorCode::kClassConflict, "id " + std::to_string(*det.id) + " is stored as " +
                                               std::string(class_name(entry.instance.cls)) + " but merged as " +
                                               std::string(class_name(det.cls)));
  }
  entry.last_update = frame;
  if (det.is_polygon()) {
    auto merged = polygon_union(Polygon(entry.instance.points), Polygon(det.points));
    if (!merged) {
      entry.instance.points = Polygon(det.points).ring();
      return MergeOutcome::kReplacedDisjoint;
    }
    entry.instance.points = merged->ring();
    return MergeOutcome::kPolygonUnion;
  }
  entry.instance.points =
      merge_polylines(Polyline(entry.instance.points), Polyline(det.points), params).points();
  return MergeOutcome::kCurveFit;
}

}  // namespace icmap
