#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icmap/io.hpp"
#include "icmap/metrics.hpp"
#include "icmap/synth.hpp"

namespace icmap {

struct EvalOptions {
  std::vector<double> thresholds{kLargeRangeThresholds.begin(), kLargeRangeThresholds.end()};
  bool mot = false;
  double mot_threshold = kDefaultMotThreshold;
  ApMatching matching = ApMatching::kGreedy;
};

/// Accumulates metrics over any number of (scene, prediction) pairs.
class Evaluator {
 public:
  explicit Evaluator(EvalOptions options)
      : options_(std::move(options)), ap_(options_.thresholds, options_.matching), mot_(options_.mot_threshold) {}

  /// Per-frame predictions come from the trace outputs when a trace is given,
  /// otherwise from the predicted map clipped to each frame's patch.
  void add(const Scene& scene, const GlobalMap& pred, const std::optional<Trace>& trace) {
    if (options_.mot && !trace) throw Error(ErrorCode::kInvalidArgument, "MOT evaluation requires a trace");
    if (trace) {
      if (trace->frames.size() != scene.frames.size()) {
        throw Error(ErrorCode::kShapeMismatch, "trace has " + std::to_string(trace->frames.size()) +
                                                   " frames but scene '" + scene.scene_id + "' has " +
                                                   std::to_string(scene.frames.size()));
      }
      if (!trace->scene_id.empty() && !scene.scene_id.empty() && trace->scene_id != scene.scene_id) {
        throw Error(ErrorCode::kInvalidArgument, "trace belongs to scene '" + trace->scene_id + "', not '" + scene.scene_id + "'");
      }
    }
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      const SceneFrame& frame = scene.frames[f];
      if (trace) {
        ap_.add_frame(trace->frames[f].outputs, frame.gt_local);
        if (options_.mot) mot_.add_frame(trace->frames[f].outputs, frame.gt_local);
      } else {
        const auto clipped = clip_gt_frame(pred, frame.ego_pose, scene.range);
        ap_.add_frame(clipped, frame.gt_local);
      }
    }
    const CdResult cd = global_map_cd(pred, scene.gt);
    for (ElementClass c : kAllClasses) {
      const std::size_t k = class_index(c);
      if (cd.cd[k]) {
        cd_sum_[k] += *cd.cd[k];
        ++cd_count_[k];
      }
    }
    ++scenes_;
    if (options_.mot) mot_ = next_scene_mot();
  }

  EvalReport report() const {
    EvalReport rep;
    rep.thresholds = options_.thresholds;
    rep.mot_match_threshold = options_.mot_threshold;
    rep.scenes = scenes_;
    const ApResult ap = summarize_ap(ap_);
    double ap_sum = 0.0, cd_sum = 0.0;
    std::size_t ap_n = 0, cd_n = 0;
    for (ElementClass c : kAllClasses) {
      const std::size_t k = class_index(c);
      ClassReport& cr = rep.classes[k];
      cr.ap_by_threshold = ap.ap_by_threshold[k];
      cr.ap = ap.ap[k];
      if (cr.ap) {
        ap_sum += *cr.ap;
        ++ap_n;
      }
      if (cd_count_[k]) {
        cr.cd = cd_sum_[k] / static_cast<double>(cd_count_[k]);
        cd_sum += *cr.cd;
        ++cd_n;
      }
      if (options_.mot) {
        cr.mot = mot_total_[k];
        cr.mot += mot_.counts(c);
      }
    }
    if (ap_n) rep.map = ap_sum / static_cast<double>(ap_n);
    if (cd_n) rep.mcd = cd_sum / static_cast<double>(cd_n);
    if (options_.mot) {
      MotCounts all;
      for (const ClassReport& cr : rep.classes) all += cr.mot;
      rep.mot_overall = all;
    }
    return rep;
  }

 private:
  // Identity history must not leak across scenes: fold the finished scene into
  // the running totals and start a fresh accumulator.
  MotAccumulator next_scene_mot() {
    for (ElementClass c : kAllClasses) mot_total_[class_index(c)] += mot_.counts(c);
    return MotAccumulator(options_.mot_threshold);
  }

  EvalOptions options_;
  ApAccumulator ap_;
  MotAccumulator mot_;
  std::array<MotCounts, kNumClasses> mot_total_{};
  std::array<double, kNumClasses> cd_sum_{};
  std::array<std::size_t, kNumClasses> cd_count_{};
  std::size_t scenes_ = 0;
};

}  // namespace icmap
