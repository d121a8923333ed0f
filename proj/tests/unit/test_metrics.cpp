#include <random>

#include <gtest/gtest.h>

#include "icmap/metrics.hpp"
#include "oracles.hpp"

using namespace icmap;

namespace {

MapInstance inst(ElementClass c, Points pts, std::optional<InstanceId> id = std::nullopt, double score = 1.0) {
  MapInstance m;
  m.cls = c;
  m.points = std::move(pts);
  m.id = id;
  m.score = score;
  return m;
}

std::vector<double> large() { return {kLargeRangeThresholds.begin(), kLargeRangeThresholds.end()}; }

Points hline(double y, double x0 = 0, double x1 = 20) { return {{x0, y}, {x1, y}}; }

}  // namespace

TEST(Ap, PerfectDetector) {
  std::vector<InstanceFrame> gts{{inst(ElementClass::kDivider, hline(0), 1), inst(ElementClass::kBoundary, hline(5), 2),
                                  inst(ElementClass::kPedCrossing, {{0, 0}, {4, 0}, {4, 8}, {0, 8}}, 3)}};
  const auto r = instance_ap(gts, gts, large());
  for (ElementClass c : kAllClasses) EXPECT_DOUBLE_EQ(*r.ap[class_index(c)], 1.0);
  EXPECT_DOUBLE_EQ(r.map, 1.0);
}

TEST(Ap, NoPredictions) {
  std::vector<InstanceFrame> gts{{inst(ElementClass::kDivider, hline(0), 1)}}, preds{{}};
  EXPECT_DOUBLE_EQ(*instance_ap(preds, gts, large()).ap[0], 0.0);
}

TEST(Ap, OneGtTwoPredictions) {
  std::vector<InstanceFrame> gts{{inst(ElementClass::kDivider, hline(0), 1)}};
  std::vector<InstanceFrame> preds{{inst(ElementClass::kDivider, hline(0.1), {}, 0.9),
                                    inst(ElementClass::kDivider, hline(10), {}, 0.8)}};
  EXPECT_DOUBLE_EQ(*instance_ap(preds, gts, large()).ap[0], 1.0);
  EXPECT_DOUBLE_EQ(average_precision({{0.9, true}, {0.8, false}}, 1), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({{0.9, false}, {0.8, true}}, 1), 0.5);
}

TEST(Ap, MonotoneInThreshold) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g(0, 1.0);
  for (int set = 0; set < 20; ++set) {
    std::vector<InstanceFrame> preds(5), gts(5);
    for (int f = 0; f < 5; ++f) {
      for (int k = 0; k < 4; ++k) {
        const ElementClass c = kAllClasses[k % 2];
        gts[f].push_back(inst(c, hline(8.0 * k), k));
        if (u(rng) < 0.8) preds[f].push_back(inst(c, hline(8.0 * k + g(rng), g(rng), 20 + g(rng)), {}, u(rng)));
      }
      if (u(rng) < 0.5) preds[f].push_back(inst(ElementClass::kDivider, hline(40 + 5 * u(rng)), {}, u(rng)));
    }
    for (ApMatching m : {ApMatching::kGreedy, ApMatching::kHungarian}) {
      const auto r = instance_ap(preds, gts, {0.5, 1.0, 1.5, 2.0}, m);
      for (std::size_t c = 0; c < 2; ++c) {
        const auto& v = r.ap_by_threshold[c];
        for (std::size_t k = 1; k < v.size(); ++k) EXPECT_GE(v[k], v[k - 1]);
        for (double x : v) {
          EXPECT_GE(x, 0.0);
          EXPECT_LE(x, 1.0);
        }
      }
    }
  }
}

TEST(Mot, PerfectTracker) {
  std::vector<InstanceFrame> gts;
  for (int f = 0; f < 4; ++f) gts.push_back({inst(ElementClass::kDivider, hline(0), 1), inst(ElementClass::kBoundary, hline(6), 2)});
  const auto r = clear_mot(gts, gts);
  EXPECT_DOUBLE_EQ(r.overall.mota(), 1.0);
  EXPECT_DOUBLE_EQ(r.overall.motp(), 0.0);
  EXPECT_EQ(r.overall.id_switches, 0u);
}

TEST(Mot, OneIdSwitch) {
  std::vector<InstanceFrame> gts, tracked;
  for (int f = 0; f < 6; ++f) {
    gts.push_back({inst(ElementClass::kDivider, hline(0), 1)});
    tracked.push_back({inst(ElementClass::kDivider, hline(0.1), f < 3 ? 10 : 11)});
  }
  const auto r = clear_mot(tracked, gts);
  EXPECT_EQ(r.overall.id_switches, 1u);
  EXPECT_NEAR(r.overall.motp(), 0.1, 1e-9);
}

TEST(Mot, FiveFrameHandCount) {
  // 2 GT lines per frame over 5 frames; frame 2 misses line B, frame 4 adds a false positive.
  std::vector<InstanceFrame> gts, tracked;
  for (int f = 0; f < 5; ++f) {
    gts.push_back({inst(ElementClass::kDivider, hline(0), 1), inst(ElementClass::kDivider, hline(10), 2)});
    InstanceFrame t{inst(ElementClass::kDivider, hline(0.2), 7)};
    if (f != 2) t.push_back(inst(ElementClass::kDivider, hline(10.2), 8));
    if (f == 4) t.push_back(inst(ElementClass::kDivider, hline(30), 9));
    tracked.push_back(t);
  }
  const auto r = clear_mot(tracked, gts);
  EXPECT_EQ(r.overall.gt, 10u);
  EXPECT_EQ(r.overall.fn, 1u);
  EXPECT_EQ(r.overall.fp, 1u);
  EXPECT_EQ(r.overall.id_switches, 0u);
  EXPECT_DOUBLE_EQ(r.overall.mota(), 0.8);
}

TEST(Cd, IdentityTranslationAndMissingClass) {
  GlobalMap gt;
  gt.entries.emplace(1, MapEntry{inst(ElementClass::kDivider, {{0, 0}, {50, 0}, {80, 20}}, 1), 0});
  gt.entries.emplace(2, MapEntry{inst(ElementClass::kBoundary, {{0, 10}, {60, 10}}, 2), 0});
  gt.entries.emplace(3, MapEntry{inst(ElementClass::kPedCrossing, {{10, 0}, {14, 0}, {14, 10}, {10, 10}}, 3), 0});
  const auto same = global_map_cd(gt, gt);
  EXPECT_NEAR(same.mcd, 0.0, 1e-12);

  // A closed ring cannot be offset uniformly from itself, so the 1 m fixture uses lines.
  GlobalMap lines, shifted;
  lines.entries.emplace(1, MapEntry{inst(ElementClass::kDivider, {{0, 0}, {120, 0}}, 1), 0});
  lines.entries.emplace(2, MapEntry{inst(ElementClass::kBoundary, {{0, 10}, {40, 10}, {120, 10}}, 2), 0});
  for (const auto& [id, e] : lines.entries) {
    MapEntry moved = e;
    for (Vec2& p : moved.instance.points) p.y += 1.0;
    shifted.entries.emplace(id, moved);
  }
  const auto r = global_map_cd(shifted, lines);
  EXPECT_NEAR(*r.cd[0], 1.0, 0.01);
  EXPECT_NEAR(*r.cd[1], 1.0, 0.01);
  EXPECT_NEAR(r.mcd, 1.0, 0.01);

  GlobalMap partial;
  partial.entries.emplace(1, gt.entries.at(1));
  const auto m = global_map_cd(partial, gt);
  EXPECT_DOUBLE_EQ(*m.cd[1], kMissingClassCd);
  EXPECT_DOUBLE_EQ(*m.cd[2], kMissingClassCd);
  EXPECT_EQ(m.classes_in_gt, 3u);

  GlobalMap only_div;
  only_div.entries.emplace(1, gt.entries.at(1));
  EXPECT_FALSE(global_map_cd(only_div, only_div).cd[1].has_value());
}

TEST(Cd, MatchesBruteForceOnDensePoints) {
  GlobalMap a, b;
  a.entries.emplace(1, MapEntry{inst(ElementClass::kDivider, {{0, 0}, {10, 0}, {10, 10}}, 1), 0});
  b.entries.emplace(1, MapEntry{inst(ElementClass::kDivider, {{0, 1}, {9, 1}, {9, 10}}, 1), 0});
  const Points da = densify(a.entries.at(1).instance.points, 0.01), db = densify(b.entries.at(1).instance.points, 0.01);
  EXPECT_NEAR(*global_map_cd(a, b).cd[0], oracle::brute_chamfer(da, db), 0.02);
}
