#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "icmap/error.hpp"
#include "icmap/geometry.hpp"
#include "icmap/instance.hpp"
#include "icmap/mapstore.hpp"
#include "icmap/polygon.hpp"

namespace icmap {

/// Perception patch size in meters: length along the heading, width across it.
struct PerceptionRange {
  double length = 100.0;
  double width = 50.0;

  Rect rect_at(const Pose2& pose) const { return {pose, length / 2.0, width / 2.0}; }
  friend bool operator==(const PerceptionRange&, const PerceptionRange&) = default;
};

inline constexpr PerceptionRange kLargeRange{100.0, 50.0};
inline constexpr PerceptionRange kSmallRange{60.0, 30.0};

enum class Curvature { kStraight, kArc, kSCurve };

struct NoiseConfig {
  double jitter = 0.0;           // per-coordinate Gaussian sigma, meters
  double dropout = 0.0;          // probability an instance is missed
  double fp_rate = 0.0;          // mean false positives per frame (Poisson)
  double split = 0.0;            // probability a polyline is emitted as two fragments
  double embedding_sigma = 0.0;  // per-dimension Gaussian noise before renormalization
  double tp_score_mean = 0.8;
  double tp_score_sigma = 0.1;
  double fp_score_mean = 0.4;
  double fp_score_sigma = 0.15;

  /// Everything off, including score spread.
  static NoiseConfig none() {
    NoiseConfig n;
    n.tp_score_sigma = 0.0;
    n.fp_score_sigma = 0.0;
    return n;
  }

  void validate() const {
    for (double p : {dropout, split}) {
      if (p < 0.0 || p > 1.0) throw Error(ErrorCode::kInvalidArgument, "noise probabilities must lie in [0,1]");
    }
    for (double s : {jitter, embedding_sigma, tp_score_sigma, fp_score_sigma, fp_rate}) {
      if (s < 0.0) throw Error(ErrorCode::kInvalidArgument, "noise magnitudes must be >= 0");
    }
  }
};

struct SceneConfig {
  double road_length = 95.0;
  int lanes = 3;
  double lane_width = 3.5;
  Curvature curvature = Curvature::kStraight;
  double radius = 150.0;
  int crossings = 2;
  double crossing_width = 4.0;
  int frames = 20;
  double frame_spacing = 5.0;
  double frame_dt = 0.5;
  PerceptionRange range = kLargeRange;
  int points_per_instance = 20;
  int embedding_dim = 16;
  NoiseConfig noise;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(road_length > 0.0) || !(lane_width > 0.0) || !(radius > 0.0) || !(crossing_width > 0.0) ||
        !(frame_spacing > 0.0) || !(frame_dt > 0.0) || !(range.length > 0.0) || !(range.width > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "scene dimensions must be positive");
    }
    if (lanes < 1) throw Error(ErrorCode::kInvalidArgument, "scene needs at least one lane");
    if (crossings < 0 || frames < 0) throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative");
    if (points_per_instance < 2) throw Error(ErrorCode::kInvalidArgument, "points_per_instance must be >= 2");
    if (embedding_dim < 1) throw Error(ErrorCode::kInvalidArgument, "embedding_dim must be >= 1");
    noise.validate();
    if (curvature != Curvature::kStraight && lanes * lane_width >= radius) {
      throw Error(ErrorCode::kInfeasibleScene, "road width exceeds the curvature radius");
    }
    if (frames > 0 && (frames - 1) * frame_spacing > road_length + 1e-9) {
      throw Error(ErrorCode::kInfeasibleScene, "ego trajectory runs past the end of the road");
    }
  }
};

struct GeneratedScene {
  GlobalMap gt;
  std::vector<Pose2> trajectory;
};

namespace detail {

// Dense centerline sampled every `step` meters of arc length.
class Centerline {
 public:
  Centerline(const SceneConfig& cfg, Pose2 start, double step = 0.05) : step_(step) {
    const double length = cfg.road_length;
    const auto n = static_cast<std::size_t>(std::ceil(length / step)) + 1;
    poses_.reserve(n);
    double x = start.x, y = start.y;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = std::min(static_cast<double>(k) * step, length);
      poses_.push_back({x, y, start.theta + heading_offset(cfg, s)});
      const double s_next = std::min(static_cast<double>(k + 1) * step, length);
      const double th = start.theta + heading_offset(cfg, 0.5 * (s + s_next));
      x += (s_next - s) * std::cos(th);
      y += (s_next - s) * std::sin(th);
    }
  }

  Pose2 at(double s) const {
    const double f = std::clamp(s / step_, 0.0, static_cast<double>(poses_.size() - 1));
    const auto k = static_cast<std::size_t>(std::floor(f));
    if (k + 1 >= poses_.size()) return poses_.back();
    const double t = f - static_cast<double>(k);
    const Pose2 &a = poses_[k], &b = poses_[k + 1];
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.theta + t * normalize_angle(b.theta - a.theta)};
  }

  Vec2 offset_point(double s, double lateral) const {
    return at(s).to_world({0.0, lateral});
  }

 private:
  static double heading_offset(const SceneConfig& cfg, double s) {
    switch (cfg.curvature) {
      case Curvature::kStraight: return 0.0;
      case Curvature::kArc: return s / cfg.radius;
      case Curvature::kSCurve: {
        const double k = 2.0 * std::numbers::pi / cfg.road_length;
        return (1.0 - std::cos(k * s)) / (k * cfg.radius);
      }
    }
    return 0.0;
  }

  double step_;
  std::vector<Pose2> poses_;
};

inline std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t p : parts) {
    words.push_back(static_cast<std::uint32_t>(p & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

inline constexpr std::uint64_t kFrameStream = 0x6672616d65ULL;
inline constexpr std::uint64_t kEmbeddingStream = 0x656d6264ULL;

// Thickness proxy for a clipped crossing: area over its longest edge.
inline double polygon_thickness(const Polygon& p) {
  double longest = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) longest = std::max(longest, distance(p.ring()[i], p.ring()[(i + 1) % p.size()]));
  return p.area() / longest;
}

}  // namespace detail

/// Ground-truth map and ego trajectory for a single-corridor road. The ego
/// drives the centerline starting at arc length 0.
inline GeneratedScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  auto rng = detail::make_rng({cfg.seed});
  std::uniform_real_distribution<double> origin(-200.0, 200.0);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double x0 = origin(rng), y0 = origin(rng), th0 = heading(rng);
  const detail::Centerline center(cfg, Pose2{x0, y0, th0});

  GeneratedScene scene;
  InstanceId next_id = 0;
  const double half_road = 0.5 * cfg.lanes * cfg.lane_width;
  const auto samples = static_cast<std::size_t>(std::ceil(cfg.road_length)) + 1;
  for (int k = 0; k <= cfg.lanes; ++k) {
    const double lateral = -half_road + k * cfg.lane_width;
    Points pts;
    pts.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      const double s = std::min(static_cast<double>(i), cfg.road_length);
      pts.push_back(center.offset_point(s, lateral));
    }
    MapInstance inst;
    inst.cls = (k == 0 || k == cfg.lanes) ? ElementClass::kBoundary : ElementClass::kDivider;
    inst.points = Polyline(std::move(pts)).points();
    inst.id = next_id++;
    scene.gt.entries.emplace(*inst.id, MapEntry{std::move(inst), 0});
  }

  const double slot = cfg.road_length / (cfg.crossings + 1);
  for (int k = 0; k < cfg.crossings; ++k) {
    const double half_w = 0.5 * cfg.crossing_width;
    double s = slot * (k + 1) + 0.2 * slot * unit(rng);
    s = std::clamp(s, half_w, cfg.road_length - half_w);
    MapInstance inst;
    inst.cls = ElementClass::kPedCrossing;
    inst.points = Polygon({center.offset_point(s - half_w, -half_road), center.offset_point(s + half_w, -half_road),
                           center.offset_point(s + half_w, half_road), center.offset_point(s - half_w, half_road)})
                      .ring();
    inst.id = next_id++;
    scene.gt.entries.emplace(*inst.id, MapEntry{std::move(inst), 0});
  }

  for (int f = 0; f < cfg.frames; ++f) scene.trajectory.push_back(center.at(f * cfg.frame_spacing));
  return scene;
}

/// Ground truth visible from `pose`: each instance clipped to the perception
/// patch, moved to the ego frame, ids kept. A polyline keeps its longest piece,
/// resampled to `points_per_instance`; slivers under 0.5 m are dropped.
inline std::vector<MapInstance> clip_gt_frame(const GlobalMap& gt, const Pose2& pose, const PerceptionRange& range,
                                              std::size_t points_per_instance = 20) {
  const Rect rect = range.rect_at(pose);
  std::vector<MapInstance> out;
  for (const auto& [id, entry] : gt.entries) {
    const MapInstance& inst = entry.instance;
    MapInstance local;
    local.cls = inst.cls;
    local.id = id;
    if (inst.is_polygon()) {
      const auto clipped = clip_polygon_to_rect(Polygon(inst.points), rect);
      if (clipped.empty() || detail::polygon_thickness(clipped.front()) < kMinPieceLength) continue;
      local.points = Polygon(transform_points(pose, clipped.front().ring(), Direction::kWorldToEgo)).ring();
    } else {
      const auto pieces = clip_polyline_to_rect(Polyline(inst.points), rect);
      if (pieces.empty()) continue;
      const auto longest = std::max_element(pieces.begin(), pieces.end(), [](const Polyline& a, const Polyline& b) {
        return a.length() < b.length();
      });
      const Polyline even = resample_even(*longest, points_per_instance);
      local.points = transform_points(pose, even.points(), Direction::kWorldToEgo);
    }
    out.push_back(std::move(local));
  }
  return out;
}

/// Fixed unit vector standing in for the detector's query feature of a GT id.
inline std::vector<double> base_embedding(std::uint64_t scene_seed, InstanceId id, int dim) {
  auto rng = detail::make_rng({scene_seed, id, detail::kEmbeddingStream});
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> e(static_cast<std::size_t>(dim));
  double n2 = 0.0;
  for (double& v : e) {
    v = g(rng);
    n2 += v * v;
  }
  for (double& v : e) v /= std::sqrt(n2);
  return e;
}

namespace detail {

inline std::vector<double> perturbed_unit(std::vector<double> e, double sigma, std::mt19937_64& rng) {
  if (sigma > 0.0) {
    std::normal_distribution<double> g(0.0, sigma);
    for (double& v : e) v += g(rng);
  }
  double n2 = 0.0;
  for (double v : e) n2 += v * v;
  for (double& v : e) v /= std::sqrt(n2);
  return e;
}

inline double draw_score(double mean, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return std::clamp(mean, 0.0, 1.0);
  std::normal_distribution<double> g(mean, sigma);
  return std::clamp(g(rng), 0.0, 1.0);
}

}  // namespace detail

/// Simulated detector output for one frame (ego frame, no ids).
inline std::vector<MapInstance> corrupt_frame(std::span<const MapInstance> gt_frame, const NoiseConfig& noise,
                                              std::uint64_t scene_seed, int frame_index, const PerceptionRange& range,
                                              std::size_t points_per_instance = 20, int embedding_dim = 16) {
  noise.validate();
  auto rng = detail::make_rng({scene_seed, static_cast<std::uint64_t>(frame_index), detail::kFrameStream});
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise.jitter > 0.0 ? noise.jitter : 1.0);
  auto jittered = [&](Points pts) {
    if (noise.jitter > 0.0) {
      for (Vec2& p : pts) p = p + Vec2{jitter(rng), jitter(rng)};
    }
    return pts;
  };

  std::vector<MapInstance> dets;
  for (const MapInstance& gt : gt_frame) {
    if (noise.dropout > 0.0 && u01(rng) < noise.dropout) continue;
    const auto base = base_embedding(scene_seed, gt.id.value_or(0), embedding_dim);
    std::vector<Points> parts;
    if (gt.is_polygon()) {
      parts.push_back(gt.points);
    } else {
      const Polyline line(gt.points);
      if (noise.split > 0.0 && u01(rng) < noise.split && line.length() > 4.0) {
        const double cut = line.length() * (0.3 + 0.4 * u01(rng));
        const Points dense = densify(line.points(), 0.05);
        Points head, tail;
        double acc = 0.0;
        head.push_back(dense.front());
        for (std::size_t i = 1; i < dense.size(); ++i) {
          acc += distance(dense[i - 1], dense[i]);
          (acc <= cut ? head : tail).push_back(dense[i]);
        }
        tail.insert(tail.begin(), head.back());
        parts.push_back(resample_even(Polyline(head), points_per_instance).points());
        parts.push_back(resample_even(Polyline(tail), points_per_instance).points());
      } else if (line.size() == points_per_instance) {
        parts.push_back(line.points());
      } else {
        parts.push_back(resample_even(line, points_per_instance).points());
      }
    }
    for (Points& part : parts) {
      MapInstance det;
      det.cls = gt.cls;
      det.points = jittered(std::move(part));
      det.score = detail::draw_score(noise.tp_score_mean, noise.tp_score_sigma, rng);
      det.embedding = detail::perturbed_unit(base, noise.embedding_sigma, rng);
      dets.push_back(std::move(det));
    }
  }

  if (noise.fp_rate > 0.0) {
    std::poisson_distribution<int> count(noise.fp_rate);
    const int n_fp = count(rng);
    const Rect rect = range.rect_at(Pose2{});
    std::uniform_real_distribution<double> ux(-range.length / 2.0, range.length / 2.0);
    std::uniform_real_distribution<double> uy(-range.width / 2.0, range.width / 2.0);
    std::uniform_real_distribution<double> uth(-std::numbers::pi, std::numbers::pi);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < n_fp; ++k) {
      MapInstance det;
      det.cls = kAllClasses[static_cast<std::size_t>(u01(rng) * 3.0) % 3];
      const Pose2 local{ux(rng), uy(rng), uth(rng)};
      if (det.is_polygon()) {
        const double hl = 1.0 + 1.0 * u01(rng), hw = 3.0 + 2.0 * u01(rng);
        const auto clipped =
            clip_polygon_to_rect(Polygon(Rect(local, hl, hw).corners()), rect);
        if (clipped.empty()) continue;
        det.points = clipped.front().ring();
      } else {
        const double half = 2.5 + 7.5 * u01(rng);
        const auto pieces = clip_polyline_to_rect(
            Polyline({local.to_world({-half, 0.0}), local.to_world({half, 0.0})}), rect);
        if (pieces.empty()) continue;
        det.points = resample_even(pieces.front(), points_per_instance).points();
      }
      det.score = detail::draw_score(noise.fp_score_mean, noise.fp_score_sigma, rng);
      std::vector<double> e(static_cast<std::size_t>(embedding_dim));
      for (double& v : e) v = g(rng);
      det.embedding = detail::perturbed_unit(std::move(e), 0.0, rng);
      dets.push_back(std::move(det));
    }
  }
  return dets;
}

struct SceneFrame {
  double t = 0.0;
  Pose2 ego_pose;
  std::vector<MapInstance> gt_local;    // ego frame, with GT ids
  std::vector<MapInstance> detections;  // ego frame, no ids
};

struct Scene {
  std::string scene_id;
  PerceptionRange range;
  GlobalMap gt;  // world frame
  std::vector<SceneFrame> frames;
};

inline Scene build_scene(const SceneConfig& cfg) {
  GeneratedScene gen = generate_scene(cfg);
  Scene scene;
  scene.scene_id = "synth-" + std::to_string(cfg.seed);
  scene.range = cfg.range;
  scene.gt = std::move(gen.gt);
  for (std::size_t f = 0; f < gen.trajectory.size(); ++f) {
    SceneFrame frame;
    frame.t = static_cast<double>(f) * cfg.frame_dt;
    frame.ego_pose = gen.trajectory[f];
    frame.gt_local = clip_gt_frame(scene.gt, frame.ego_pose, cfg.range,
                                   static_cast<std::size_t>(cfg.points_per_instance));
    frame.detections = corrupt_frame(frame.gt_local, cfg.noise, cfg.seed, static_cast<int>(f), cfg.range,
                                     static_cast<std::size_t>(cfg.points_per_instance), cfg.embedding_dim);
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

}  // namespace icmap
