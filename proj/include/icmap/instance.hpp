#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icmap/error.hpp"
#include "icmap/geometry.hpp"

namespace icmap {

using InstanceId = std::uint64_t;

enum class ElementClass { kDivider = 0, kBoundary = 1, kPedCrossing = 2 };

inline constexpr std::array<ElementClass, 3> kAllClasses = {ElementClass::kDivider, ElementClass::kBoundary,
                                                            ElementClass::kPedCrossing};
inline constexpr std::size_t kNumClasses = kAllClasses.size();

constexpr std::string_view class_name(ElementClass c) {
  switch (c) {
    case ElementClass::kDivider: return "divider";
    case ElementClass::kBoundary: return "boundary";
    case ElementClass::kPedCrossing: return "ped_crossing";
  }
  return "unknown";
}

inline std::optional<ElementClass> parse_class(std::string_view name) {
  for (ElementClass c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

constexpr bool is_polygon_class(ElementClass c) { return c == ElementClass::kPedCrossing; }
constexpr std::size_t class_index(ElementClass c) { return static_cast<std::size_t>(c); }

/// One vector map element. Geometry is a polyline for dividers and boundaries
/// and a ring for pedestrian crossings; the frame (ego or world) is implied by context.
struct MapInstance {
  ElementClass cls = ElementClass::kDivider;
  Points points;
  double score = 1.0;
  std::optional<InstanceId> id;
  std::optional<std::vector<double>> embedding;

  bool is_polygon() const { return is_polygon_class(cls); }
  CurveRef curve() const { return {points, is_polygon()}; }
};

inline MapInstance transformed(MapInstance inst, const Pose2& pose, Direction direction) {
  inst.points = transform_points(pose, inst.points, direction);
  return inst;
}

inline std::vector<MapInstance> transformed(std::vector<MapInstance> insts, const Pose2& pose, Direction direction) {
  for (auto& inst : insts) inst.points = transform_points(pose, inst.points, direction);
  return insts;
}

inline void validate_instance(const MapInstance& inst) {
  if (inst.is_polygon()) {
    (void)Polygon(inst.points);
  } else {
    (void)Polyline(inst.points);
  }
  if (inst.embedding) {
    double n2 = 0.0;
    for (double v : *inst.embedding) n2 += v * v;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6) throw Error(ErrorCode::kInvalidArgument, "embedding is not unit norm");
  }
}

// Spacing used whenever instances are compared as continuous curves.
inline constexpr double kCurveSampleSpacing = 0.5;

inline double instance_distance(const MapInstance& a, const MapInstance& b, double spacing = kCurveSampleSpacing) {
  return curve_chamfer(a.curve(), b.curve(), spacing);
}

}  // namespace icmap
