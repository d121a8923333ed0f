#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "icmap/error.hpp"
#include "icmap/geometry.hpp"
#include "icmap/hungarian.hpp"
#include "icmap/instance.hpp"

namespace icmap {

/// N×M detection-to-track similarity scores, row-major, each entry in [0,1].
class AffinityMatrix {
 public:
  AffinityMatrix() = default;
  AffinityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct FilteredAffinity {
  AffinityMatrix scores;
  std::vector<std::uint8_t> eligible;  // row-major mask

  bool is_eligible(std::size_t r, std::size_t c) const { return eligible[r * scores.cols() + c] != 0; }
  std::size_t eligible_count() const { return static_cast<std::size_t>(std::count(eligible.begin(), eligible.end(), 1)); }
};

struct Match {
  std::size_t det = 0;
  std::size_t track = 0;
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

enum class GeometricMetric {
  kCurveChamfer,  // densified curves, point-to-segment (default)
  kPointChamfer,  // raw point sets
  kOrderedL2,     // mean distance of index-aligned resampled points, best of both orientations
};

inline double ordered_mean_l2(const MapInstance& a, const MapInstance& b, std::size_t samples = 20) {
  auto resampled = [samples](const MapInstance& inst) {
    Points pts = inst.points;
    if (inst.is_polygon()) pts.push_back(pts.front());
    return resample_even(Polyline(std::move(pts)), samples).points();
  };
  const Points pa = resampled(a), pb = resampled(b);
  double forward = 0.0, backward = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    forward += distance(pa[k], pb[k]);
    backward += distance(pa[k], pb[samples - 1 - k]);
  }
  return std::min(forward, backward) / static_cast<double>(samples);
}

inline double geometric_distance(const MapInstance& a, const MapInstance& b, GeometricMetric metric) {
  switch (metric) {
    case GeometricMetric::kCurveChamfer: return instance_distance(a, b);
    case GeometricMetric::kPointChamfer: return chamfer_distance(a.points, b.points);
    case GeometricMetric::kOrderedL2: return ordered_mean_l2(a, b);
  }
  return std::numeric_limits<double>::infinity();
}

/// exp(-d/tau) for same-class pairs, 0 across classes.
inline AffinityMatrix geometric_affinity(std::span<const MapInstance> dets, std::span<const MapInstance> tracks,
                                         double tau, GeometricMetric metric = GeometricMetric::kCurveChamfer) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  AffinityMatrix h(dets.size(), tracks.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      if (dets[i].cls != tracks[j].cls) continue;
      h.at(i, j) = std::exp(-geometric_distance(dets[i], tracks[j], metric) / tau);
    }
  }
  return h;
}

/// Shifted cosine similarity (1 + cos) / 2 of unit embeddings.
inline AffinityMatrix feature_affinity(std::span<const MapInstance> dets, std::span<const MapInstance> tracks) {
  AffinityMatrix h(dets.size(), tracks.size());
  auto require = [](const MapInstance& inst) -> const std::vector<double>& {
    if (!inst.embedding) throw Error(ErrorCode::kMissingEmbedding, "instance has no embedding");
    return *inst.embedding;
  };
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& ei = require(dets[i]);
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      const auto& ej = require(tracks[j]);
      if (ei.size() != ej.size()) throw Error(ErrorCode::kShapeMismatch, "embedding dimensions differ");
      double c = 0.0;
      for (std::size_t k = 0; k < ei.size(); ++k) c += ei[k] * ej[k];
      h.at(i, j) = std::clamp((1.0 + c) / 2.0, 0.0, 1.0);
    }
  }
  return h;
}

inline AffinityMatrix fuse_affinity(const AffinityMatrix& geo, const AffinityMatrix& feat, double w_geo,
                                    double w_feat) {
  if (geo.rows() != feat.rows() || geo.cols() != feat.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "affinity matrices differ in shape");
  }
  if (w_geo < 0.0 || w_feat < 0.0 || std::abs(w_geo + w_feat - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "fusion weights must be non-negative and sum to 1");
  }
  AffinityMatrix out(geo.rows(), geo.cols());
  for (std::size_t r = 0; r < geo.rows(); ++r) {
    for (std::size_t c = 0; c < geo.cols(); ++c) {
      out.at(r, c) = std::clamp(w_geo * geo.at(r, c) + w_feat * feat.at(r, c), 0.0, 1.0);
    }
  }
  return out;
}

/// Marks entries strictly above theta as eligible.
inline FilteredAffinity threshold_filter(const AffinityMatrix& h, double theta) {
  if (theta < 0.0 || theta >= 1.0) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0,1)");
  FilteredAffinity f{h, std::vector<std::uint8_t>(h.values().size(), 0)};
  for (std::size_t k = 0; k < h.values().size(); ++k) f.eligible[k] = h.values()[k] > theta ? 1 : 0;
  return f;
}

/// One-to-one matching over eligible pairs maximizing the total score.
/// Ineligible entries cost nothing in the padded assignment problem, so the
/// optimal full assignment restricted to eligible pairs is an optimal partial matching.
inline std::vector<Match> optimal_match(const FilteredAffinity& f) {
  const std::size_t rows = f.scores.rows(), cols = f.scores.cols();
  std::vector<Match> matches;
  if (rows == 0 || cols == 0 || f.eligible_count() == 0) return matches;
  std::vector<double> cost(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (f.is_eligible(r, c)) cost[r * cols + c] = -f.scores.at(r, c);
    }
  }
  const auto assignment = solve_min_cost_assignment(cost, rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const int c = assignment[r];
    if (c >= 0 && f.is_eligible(r, static_cast<std::size_t>(c))) {
      matches.push_back({r, static_cast<std::size_t>(c), f.scores.at(r, static_cast<std::size_t>(c))});
    }
  }
  return matches;
}

inline double total_score(std::span<const Match> matches) {
  double total = 0.0;
  for (const Match& m : matches) total += m.score;
  return total;
}

struct Track {
  MapInstance instance;  // world frame, carries an id
  int last_seen = 0;
  int age_missed = 0;
};

/// Tracking memory buffer carried between frames.
struct TrackBuffer {
  std::vector<Track> tracks;
  InstanceId next_id = 0;
  std::optional<int> last_frame;

  std::vector<MapInstance> instances() const {
    std::vector<MapInstance> out;
    out.reserve(tracks.size());
    for (const Track& t : tracks) out.push_back(t.instance);
    return out;
  }
};

/// Matched detections inherit the track's id; the rest take fresh ids from
/// buffer.next_id, which advances monotonically.
inline std::vector<MapInstance> allocate_ids(std::span<const MapInstance> dets, std::span<const Match> matching,
                                             TrackBuffer& buffer) {
  std::vector<MapInstance> out(dets.begin(), dets.end());
  std::vector<bool> matched(dets.size(), false);
  for (const Match& m : matching) {
    if (m.det >= dets.size() || m.track >= buffer.tracks.size() || matched[m.det]) {
      throw Error(ErrorCode::kInvalidArgument, "matching references an invalid or repeated index");
    }
    matched[m.det] = true;
    out[m.det].id = buffer.tracks[m.track].instance.id;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!matched[i]) out[i].id = buffer.next_id++;
  }
  return out;
}

/// Replaces matched tracks, ages and prunes unmatched ones, appends new ids.
inline TrackBuffer update_buffer(TrackBuffer buffer, std::span<const MapInstance> dets_world, int frame,
                                 int max_age) {
  std::map<InstanceId, std::size_t> by_id;
  for (std::size_t i = 0; i < dets_world.size(); ++i) {
    if (!dets_world[i].id) throw Error(ErrorCode::kInvalidArgument, "detection without id in buffer update");
    if (!by_id.emplace(*dets_world[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "id " + std::to_string(*dets_world[i].id) + " appears twice");
    }
  }

  std::vector<Track> kept;
  std::set<InstanceId> seen;
  for (Track& t : buffer.tracks) {
    const InstanceId id = *t.instance.id;
    if (auto it = by_id.find(id); it != by_id.end()) {
      t.instance = dets_world[it->second];
      t.last_seen = frame;
      t.age_missed = 0;
      seen.insert(id);
      kept.push_back(std::move(t));
    } else if (++t.age_missed <= max_age) {
      kept.push_back(std::move(t));
    }
  }
  for (const MapInstance& d : dets_world) {
    if (seen.count(*d.id)) continue;
    kept.push_back({d, frame, 0});
    buffer.next_id = std::max(buffer.next_id, *d.id + 1);
  }
  buffer.tracks = std::move(kept);
  buffer.last_frame = frame;
  return buffer;
}

struct AssociationConfig {
  double tau = 2.0;
  double theta = 0.5;
  double w_geo = 0.7;
  double w_feat = 0.3;
  int max_age = 2;
  GeometricMetric metric = GeometricMetric::kCurveChamfer;
};

struct AcceptedMatch {
  std::size_t det = 0;
  InstanceId track_id = 0;
  double affinity = 0.0;
};

struct FrameAssociation {
  std::vector<MapInstance> dets;  // ego frame, ids assigned
  std::vector<AcceptedMatch> matches;
  std::vector<InstanceId> issued_ids;
  TrackBuffer buffer;
};

/// One tracking step: tracks into the current ego frame, affinities, fusion,
/// threshold, optimal matching, id allocation, buffer update in world frame.
/// Falls back to geometry-only affinity when any instance lacks an embedding.
inline FrameAssociation associate_frame(const TrackBuffer& buffer, std::span<const MapInstance> dets_ego,
                                        const Pose2& pose, int frame, const AssociationConfig& config) {
  if (buffer.last_frame && frame <= *buffer.last_frame) {
    throw Error(ErrorCode::kOrderingError, "frame " + std::to_string(frame) + " does not follow frame " +
                                               std::to_string(*buffer.last_frame));
  }
  std::vector<MapInstance> tracks_ego = transformed(buffer.instances(), pose, Direction::kWorldToEgo);

  const AffinityMatrix geo = geometric_affinity(dets_ego, tracks_ego, config.tau, config.metric);
  const bool has_features =
      std::all_of(dets_ego.begin(), dets_ego.end(), [](const MapInstance& d) { return d.embedding.has_value(); }) &&
      std::all_of(tracks_ego.begin(), tracks_ego.end(), [](const MapInstance& t) { return t.embedding.has_value(); });
  const AffinityMatrix feat = has_features ? feature_affinity(dets_ego, tracks_ego) : geo;
  AffinityMatrix fused = fuse_affinity(geo, feat, config.w_geo, config.w_feat);
  // Class gate holds after fusion too.
  for (std::size_t i = 0; i < dets_ego.size(); ++i) {
    for (std::size_t j = 0; j < tracks_ego.size(); ++j) {
      if (dets_ego[i].cls != tracks_ego[j].cls) fused.at(i, j) = 0.0;
    }
  }
  const auto matches = optimal_match(threshold_filter(fused, config.theta));

  FrameAssociation result;
  result.buffer = buffer;
  const InstanceId first_new = buffer.next_id;
  result.dets = allocate_ids(dets_ego, matches, result.buffer);
  for (InstanceId id = first_new; id < result.buffer.next_id; ++id) result.issued_ids.push_back(id);
  for (const Match& m : matches) result.matches.push_back({m.det, *buffer.tracks[m.track].instance.id, m.score});

  const auto world = transformed(result.dets, pose, Direction::kEgoToWorld);
  result.buffer = update_buffer(std::move(result.buffer), world, frame, config.max_age);
  return result;
}

/// Post-processing baseline: greedy nearest-distance, same-class matching
/// against the previous outputs (world frame) with a distance gate. Run on
/// noiseless ground truth it doubles as the GT id labeler.
inline std::vector<std::vector<MapInstance>> post_track_baseline(std::span<const std::vector<MapInstance>> frames,
                                                                 std::span<const Pose2> poses, double dist_threshold,
                                                                 int max_age = 0) {
  if (frames.size() != poses.size()) throw Error(ErrorCode::kShapeMismatch, "frames and poses differ in length");
  std::vector<std::vector<MapInstance>> out;
  out.reserve(frames.size());
  std::vector<Track> live;
  InstanceId next_id = 0;

  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto world = transformed(frames[f], poses[f], Direction::kEgoToWorld);
    struct Candidate {
      double dist;
      std::size_t det;
      std::size_t track;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < world.size(); ++i) {
      for (std::size_t j = 0; j < live.size(); ++j) {
        if (world[i].cls != live[j].instance.cls) continue;
        const double d = instance_distance(world[i], live[j].instance);
        if (d < dist_threshold) candidates.push_back({d, i, j});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.det != b.det) return a.det < b.det;
      return a.track < b.track;
    });
    std::vector<std::optional<std::size_t>> det_to_track(world.size());
    std::vector<bool> track_taken(live.size(), false);
    for (const Candidate& c : candidates) {
      if (det_to_track[c.det] || track_taken[c.track]) continue;
      det_to_track[c.det] = c.track;
      track_taken[c.track] = true;
    }

    std::vector<MapInstance> tracked = frames[f];
    std::vector<Track> next_live;
    for (std::size_t i = 0; i < world.size(); ++i) {
      tracked[i].id = det_to_track[i] ? *live[*det_to_track[i]].instance.id : next_id++;
      MapInstance w = world[i];
      w.id = tracked[i].id;
      next_live.push_back({std::move(w), static_cast<int>(f), 0});
    }
    for (std::size_t j = 0; j < live.size(); ++j) {
      if (!track_taken[j] && ++live[j].age_missed <= max_age) next_live.push_back(std::move(live[j]));
    }
    live = std::move(next_live);
    out.push_back(std::move(tracked));
  }
  return out;
}

}  // namespace icmap
