#pragma once

#include <functional>
#include <string>
#include <vector>

#include "icmap/association.hpp"
#include "icmap/curvefit.hpp"
#include "icmap/io.hpp"
#include "icmap/mapstore.hpp"
#include "icmap/synth.hpp"

namespace icmap {

struct PipelineConfig {
  AssociationConfig association;
  SmoothingFitParams fit;
  double score_threshold = 0.5;  // detections below are discarded before tracking
  double expand = 20.0;
  std::size_t n_sample = 20;
  bool fusion = true;
  double fusion_radius = 1.0;
  double fusion_weight = 0.5;

  void validate() const {
    fit.validate();
    if (association.tau <= 0.0) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
    if (association.theta < 0.0 || association.theta >= 1.0) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0,1)");
    if (association.w_geo < 0.0 || association.w_feat < 0.0 || std::abs(association.w_geo + association.w_feat - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "w_geo and w_feat must be non-negative and sum to 1");
    }
    if (association.max_age < 0) throw Error(ErrorCode::kInvalidArgument, "max_age must be >= 0");
    if (expand < 0.0) throw Error(ErrorCode::kInvalidArgument, "expand must be >= 0");
    if (n_sample < 2) throw Error(ErrorCode::kInvalidSampleCount, "n_sample must be >= 2");
    if (fusion_radius < 0.0) throw Error(ErrorCode::kInvalidArgument, "fusion radius must be >= 0");
    if (fusion_weight < 0.0 || fusion_weight > 1.0) throw Error(ErrorCode::kInvalidArgument, "fusion weight must lie in [0,1]");
  }

  Json to_json() const {
    const char* metric = association.metric == GeometricMetric::kCurveChamfer   ? "curve_chamfer"
                         : association.metric == GeometricMetric::kPointChamfer ? "point_chamfer"
                                                                                : "ordered_l2";
    return {{"tau", association.tau},
            {"theta", association.theta},
            {"w_geo", association.w_geo},
            {"w_feat", association.w_feat},
            {"max_age", association.max_age},
            {"metric", metric},
            {"score_threshold", score_threshold},
            {"expand", expand},
            {"n_sample", n_sample},
            {"fusion", fusion},
            {"fusion_radius", fusion_radius},
            {"fusion_weight", fusion_weight},
            {"s", fit.s},
            {"degree", fit.degree},
            {"out_spacing", fit.out_spacing},
            {"min_points", fit.min_points},
            {"control_spacing", fit.control_spacing}};
  }
};

struct PipelineResult {
  GlobalMap map;
  Trace trace;
  std::size_t disjoint_replacements = 0;
};

/// Streams frames through tracking, history sampling, fusion and merging.
/// `on_merge` (optional) sees every merge outcome, e.g. to log disjoint replacements.
inline PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& config,
                                   const std::function<void(int, InstanceId, MergeOutcome)>& on_merge = {}) {
  config.validate();
  PipelineResult result;
  result.trace.scene_id = scene.scene_id;
  result.trace.config = config.to_json();
  TrackBuffer buffer;
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const SceneFrame& frame = scene.frames[f];
    if (f > 0 && !(frame.t > scene.frames[f - 1].t)) {
      throw Error(ErrorCode::kOrderingError, "frame " + std::to_string(f) + " has t=" + std::to_string(frame.t) +
                                                 " which does not follow t=" + std::to_string(scene.frames[f - 1].t));
    }
    const int index = static_cast<int>(f);
    std::vector<MapInstance> dets;
    for (const MapInstance& d : frame.detections) {
      if (d.score >= config.score_threshold) dets.push_back(d);
    }

    FrameAssociation assoc = associate_frame(buffer, dets, frame.ego_pose, index, config.association);
    buffer = std::move(assoc.buffer);

    std::vector<InstanceId> ids;
    for (const MapInstance& d : assoc.dets) ids.push_back(*d.id);
    const Rect patch = scene.range.rect_at(frame.ego_pose);
    const SampledHistory history =
        config.fusion ? sample_history(result.map, patch, config.expand, ids, config.n_sample) : SampledHistory{};

    TraceFrame tf;
    tf.t = frame.t;
    tf.detection_count = dets.size();
    tf.matches = assoc.matches;
    tf.issued_ids = assoc.issued_ids;
    for (const MapInstance& d : assoc.dets) {
      MapInstance world = transformed(d, frame.ego_pose, Direction::kEgoToWorld);
      if (config.fusion) {
        if (auto it = history.find(*world.id); it != history.end()) {
          world = fuse_with_history(world, it->second, config.fusion_radius, config.fusion_weight);
        }
      }
      MapInstance out = transformed(world, frame.ego_pose, Direction::kWorldToEgo);
      out.embedding.reset();
      tf.outputs.push_back(std::move(out));
      const MergeOutcome outcome = merge_instance(result.map, world, index, config.fit);
      if (outcome == MergeOutcome::kReplacedDisjoint) ++result.disjoint_replacements;
      if (on_merge) on_merge(index, *world.id, outcome);
    }
    result.trace.frames.push_back(std::move(tf));
  }
  return result;
}

}  // namespace icmap
