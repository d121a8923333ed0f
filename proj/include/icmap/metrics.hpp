#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "icmap/association.hpp"
#include "icmap/geometry.hpp"
#include "icmap/instance.hpp"
#include "icmap/mapstore.hpp"

namespace icmap {

using InstanceFrame = std::vector<MapInstance>;

inline constexpr std::array<double, 3> kLargeRangeThresholds = {1.0, 1.5, 2.0};
inline constexpr std::array<double, 3> kSmallRangeThresholds = {0.5, 1.0, 1.5};
inline constexpr double kDefaultMotThreshold = 1.5;
// CD charged for a class present in the ground truth but missing from the prediction.
inline constexpr double kMissingClassCd = 10.0;

// ---------------------------------------------------------------------------
// Average precision

enum class ApMatching { kGreedy, kHungarian };

struct ScoredHit {
  double score = 0.0;
  bool tp = false;
};

/// All-point interpolated area under the precision/recall curve.
inline double average_precision(std::vector<ScoredHit> hits, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  std::stable_sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (const ScoredHit& h : hits) {
    (h.tp ? tp : fp) += 1;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

/// Pools scored hits per class and threshold across frames and scenes.
class ApAccumulator {
 public:
  explicit ApAccumulator(std::vector<double> thresholds, ApMatching matching = ApMatching::kGreedy)
      : thresholds_(std::move(thresholds)), matching_(matching) {
    for (auto& per_class : hits_) per_class.resize(thresholds_.size());
  }

  const std::vector<double>& thresholds() const { return thresholds_; }

  void add_frame(std::span<const MapInstance> preds, std::span<const MapInstance> gts) {
    for (ElementClass cls : kAllClasses) {
      std::vector<std::size_t> p_idx, g_idx;
      for (std::size_t i = 0; i < preds.size(); ++i) if (preds[i].cls == cls) p_idx.push_back(i);
      for (std::size_t j = 0; j < gts.size(); ++j) if (gts[j].cls == cls) g_idx.push_back(j);
      const std::size_t c = class_index(cls);
      num_gt_[c] += g_idx.size();
      if (p_idx.empty()) continue;

      std::vector<std::vector<double>> dist(p_idx.size(), std::vector<double>(g_idx.size()));
      for (std::size_t a = 0; a < p_idx.size(); ++a)
        for (std::size_t b = 0; b < g_idx.size(); ++b) dist[a][b] = instance_distance(preds[p_idx[a]], gts[g_idx[b]]);

      for (std::size_t t = 0; t < thresholds_.size(); ++t) {
        const auto tp = matching_ == ApMatching::kGreedy ? greedy(preds, p_idx, dist, thresholds_[t])
                                                         : hungarian(dist, thresholds_[t]);
        for (std::size_t a = 0; a < p_idx.size(); ++a) hits_[c][t].push_back({preds[p_idx[a]].score, tp[a]});
      }
    }
  }

  void merge(const ApAccumulator& other) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      num_gt_[c] += other.num_gt_[c];
      for (std::size_t t = 0; t < thresholds_.size(); ++t) {
        hits_[c][t].insert(hits_[c][t].end(), other.hits_[c][t].begin(), other.hits_[c][t].end());
      }
    }
  }

  std::size_t num_gt(ElementClass cls) const { return num_gt_[class_index(cls)]; }

  /// AP per threshold; empty when the class has no ground truth.
  std::vector<double> ap_by_threshold(ElementClass cls) const {
    const std::size_t c = class_index(cls);
    if (num_gt_[c] == 0) return {};
    std::vector<double> out;
    for (const auto& hits : hits_[c]) out.push_back(average_precision(hits, num_gt_[c]));
    return out;
  }

 private:
  static std::vector<bool> greedy(std::span<const MapInstance> preds, const std::vector<std::size_t>& p_idx,
                                  const std::vector<std::vector<double>>& dist, double threshold) {
    std::vector<std::size_t> order(p_idx.size());
    for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return preds[p_idx[x]].score > preds[p_idx[y]].score; });
    const std::size_t n_gt = dist.empty() ? 0 : dist[0].size();
    std::vector<bool> gt_used(n_gt, false), tp(p_idx.size(), false);
    for (std::size_t a : order) {
      std::optional<std::size_t> best;
      for (std::size_t b = 0; b < n_gt; ++b) {
        if (gt_used[b] || dist[a][b] >= threshold) continue;
        if (!best || dist[a][b] < dist[a][*best]) best = b;
      }
      if (best) {
        gt_used[*best] = true;
        tp[a] = true;
      }
    }
    return tp;
  }

  static std::vector<bool> hungarian(const std::vector<std::vector<double>>& dist, double threshold) {
    const std::size_t rows = dist.size(), cols = rows ? dist[0].size() : 0;
    AffinityMatrix h(rows, cols);
    for (std::size_t a = 0; a < rows; ++a)
      for (std::size_t b = 0; b < cols; ++b) h.at(a, b) = dist[a][b] < threshold ? threshold - dist[a][b] : 0.0;
    FilteredAffinity f{h, std::vector<std::uint8_t>(rows * cols, 0)};
    for (std::size_t k = 0; k < rows * cols; ++k) f.eligible[k] = h.values()[k] > 0.0 ? 1 : 0;
    std::vector<bool> tp(rows, false);
    for (const Match& m : optimal_match(f)) tp[m.det] = true;
    return tp;
  }

  std::vector<double> thresholds_;
  ApMatching matching_;
  std::array<std::vector<std::vector<ScoredHit>>, kNumClasses> hits_;
  std::array<std::size_t, kNumClasses> num_gt_{};
};

struct ApResult {
  std::array<std::vector<double>, kNumClasses> ap_by_threshold;
  std::array<std::optional<double>, kNumClasses> ap;
  double map = 0.0;
};

inline ApResult summarize_ap(const ApAccumulator& acc) {
  ApResult r;
  double sum = 0.0;
  std::size_t n = 0;
  for (ElementClass cls : kAllClasses) {
    const std::size_t c = class_index(cls);
    r.ap_by_threshold[c] = acc.ap_by_threshold(cls);
    if (r.ap_by_threshold[c].empty()) continue;
    double mean = 0.0;
    for (double v : r.ap_by_threshold[c]) mean += v;
    mean /= static_cast<double>(r.ap_by_threshold[c].size());
    r.ap[c] = mean;
    sum += mean;
    ++n;
  }
  r.map = n ? sum / static_cast<double>(n) : 0.0;
  return r;
}

/// Per-frame score-ordered matching, TP iff same class, distance below the
/// threshold and the ground truth still free.
inline ApResult instance_ap(std::span<const InstanceFrame> preds, std::span<const InstanceFrame> gts,
                            std::vector<double> thresholds, ApMatching matching = ApMatching::kGreedy) {
  if (preds.size() != gts.size()) throw Error(ErrorCode::kShapeMismatch, "prediction and GT frame counts differ");
  ApAccumulator acc(std::move(thresholds), matching);
  for (std::size_t f = 0; f < preds.size(); ++f) acc.add_frame(preds[f], gts[f]);
  return summarize_ap(acc);
}

// ---------------------------------------------------------------------------
// CLEAR-MOT

struct MotCounts {
  std::size_t gt = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t id_switches = 0;
  std::size_t matches = 0;
  double distance_sum = 0.0;

  double mota() const {
    return gt ? 1.0 - static_cast<double>(fn + fp + id_switches) / static_cast<double>(gt) : 1.0;
  }
  double motp() const { return matches ? distance_sum / static_cast<double>(matches) : 0.0; }

  MotCounts& operator+=(const MotCounts& o) {
    gt += o.gt;
    fp += o.fp;
    fn += o.fn;
    id_switches += o.id_switches;
    matches += o.matches;
    distance_sum += o.distance_sum;
    return *this;
  }
};

/// Frame-by-frame CLEAR-MOT bookkeeping. Correspondences from the previous
/// frame persist while still inside the gate; the rest are assigned optimally
/// on distance.
class MotAccumulator {
 public:
  explicit MotAccumulator(double match_threshold = kDefaultMotThreshold) : gate_(match_threshold) {}

  void add_frame(std::span<const MapInstance> preds, std::span<const MapInstance> gts) {
    for (ElementClass cls : kAllClasses) {
      std::vector<std::size_t> p_idx, g_idx;
      for (std::size_t i = 0; i < preds.size(); ++i) if (preds[i].cls == cls) p_idx.push_back(i);
      for (std::size_t j = 0; j < gts.size(); ++j) if (gts[j].cls == cls) g_idx.push_back(j);
      MotCounts& counts = counts_[class_index(cls)];
      counts.gt += g_idx.size();

      std::vector<std::vector<double>> dist(g_idx.size(), std::vector<double>(p_idx.size()));
      for (std::size_t a = 0; a < g_idx.size(); ++a)
        for (std::size_t b = 0; b < p_idx.size(); ++b) dist[a][b] = instance_distance(gts[g_idx[a]], preds[p_idx[b]]);

      std::vector<std::optional<std::size_t>> gt_to_pred(g_idx.size());
      std::vector<bool> pred_taken(p_idx.size(), false);
      for (std::size_t a = 0; a < g_idx.size(); ++a) {
        const auto prev = last_match_.find(gt_key(gts[g_idx[a]]));
        if (prev == last_match_.end()) continue;
        for (std::size_t b = 0; b < p_idx.size(); ++b) {
          if (!pred_taken[b] && preds[p_idx[b]].id == prev->second && dist[a][b] < gate_) {
            gt_to_pred[a] = b;
            pred_taken[b] = true;
            break;
          }
        }
      }

      std::vector<std::size_t> free_g, free_p;
      for (std::size_t a = 0; a < g_idx.size(); ++a) if (!gt_to_pred[a]) free_g.push_back(a);
      for (std::size_t b = 0; b < p_idx.size(); ++b) if (!pred_taken[b]) free_p.push_back(b);
      AffinityMatrix h(free_g.size(), free_p.size());
      FilteredAffinity f{h, std::vector<std::uint8_t>(free_g.size() * free_p.size(), 0)};
      for (std::size_t a = 0; a < free_g.size(); ++a) {
        for (std::size_t b = 0; b < free_p.size(); ++b) {
          const double d = dist[free_g[a]][free_p[b]];
          if (d < gate_) {
            f.scores.at(a, b) = gate_ - d;
            f.eligible[a * free_p.size() + b] = 1;
          }
        }
      }
      for (const Match& m : optimal_match(f)) {
        gt_to_pred[free_g[m.det]] = free_p[m.track];
        pred_taken[free_p[m.track]] = true;
      }

      for (std::size_t a = 0; a < g_idx.size(); ++a) {
        if (!gt_to_pred[a]) {
          ++counts.fn;
          continue;
        }
        const std::size_t b = *gt_to_pred[a];
        ++counts.matches;
        counts.distance_sum += dist[a][b];
        const auto pred_id = preds[p_idx[b]].id;
        auto [it, inserted] = last_match_.try_emplace(gt_key(gts[g_idx[a]]), pred_id);
        if (!inserted) {
          if (it->second != pred_id) ++counts.id_switches;
          it->second = pred_id;
        }
      }
      for (std::size_t b = 0; b < p_idx.size(); ++b) if (!pred_taken[b]) ++counts.fp;
    }
  }

  const MotCounts& counts(ElementClass cls) const { return counts_[class_index(cls)]; }

  MotCounts overall() const {
    MotCounts total;
    for (const auto& c : counts_) total += c;
    return total;
  }

 private:
  static std::pair<std::size_t, InstanceId> gt_key(const MapInstance& gt) {
    return {class_index(gt.cls), gt.id.value_or(0)};
  }

  double gate_;
  std::array<MotCounts, kNumClasses> counts_{};
  std::map<std::pair<std::size_t, InstanceId>, std::optional<InstanceId>> last_match_;
};

struct MotResult {
  std::array<MotCounts, kNumClasses> per_class{};
  MotCounts overall;
};

inline MotResult clear_mot(std::span<const InstanceFrame> tracked, std::span<const InstanceFrame> gts,
                           double match_threshold = kDefaultMotThreshold) {
  if (tracked.size() != gts.size()) throw Error(ErrorCode::kShapeMismatch, "tracked and GT frame counts differ");
  MotAccumulator acc(match_threshold);
  for (std::size_t f = 0; f < tracked.size(); ++f) acc.add_frame(tracked[f], gts[f]);
  MotResult r;
  for (ElementClass cls : kAllClasses) r.per_class[class_index(cls)] = acc.counts(cls);
  r.overall = acc.overall();
  return r;
}

// ---------------------------------------------------------------------------
// Global map Chamfer distance

struct CdResult {
  std::array<std::optional<double>, kNumClasses> cd;
  double mcd = 0.0;
  std::size_t classes_in_gt = 0;
};

/// Per class: all instances pooled, densified at `spacing` and compared as
/// curves. Classes absent from the ground truth are skipped; classes missing
/// only from the prediction are charged kMissingClassCd.
inline CdResult global_map_cd(const GlobalMap& pred, const GlobalMap& gt, double spacing = kCurveSampleSpacing) {
  CdResult r;
  double sum = 0.0;
  for (ElementClass cls : kAllClasses) {
    std::vector<CurveRef> p_curves, g_curves;
    for (const auto& [id, e] : pred.entries) if (e.instance.cls == cls) p_curves.push_back(e.instance.curve());
    for (const auto& [id, e] : gt.entries) if (e.instance.cls == cls) g_curves.push_back(e.instance.curve());
    if (g_curves.empty()) continue;
    const double cd = p_curves.empty() ? kMissingClassCd : curve_chamfer(p_curves, g_curves, spacing);
    r.cd[class_index(cls)] = cd;
    sum += cd;
    ++r.classes_in_gt;
  }
  r.mcd = r.classes_in_gt ? sum / static_cast<double>(r.classes_in_gt) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Report

struct ClassReport {
  std::vector<double> ap_by_threshold;
  std::optional<double> ap;
  MotCounts mot;
  std::optional<double> cd;
};

struct EvalReport {
  std::vector<double> thresholds;
  double mot_match_threshold = kDefaultMotThreshold;
  std::array<ClassReport, kNumClasses> classes;
  std::optional<double> map;
  std::optional<MotCounts> mot_overall;
  std::optional<double> mcd;
  std::size_t scenes = 0;
};

}  // namespace icmap
