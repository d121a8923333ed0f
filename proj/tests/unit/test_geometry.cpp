#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "icmap/geometry.hpp"
#include "oracles.hpp"

using namespace icmap;

TEST(Pose2, NormalizesTheta) {
  EXPECT_NEAR(Pose2(0, 0, 3 * std::numbers::pi).theta, std::numbers::pi, 1e-12);
  EXPECT_NEAR(Pose2(0, 0, -std::numbers::pi).theta, std::numbers::pi, 1e-12);
  EXPECT_NEAR(Pose2(0, 0, -0.5).theta, -0.5, 1e-15);
}

TEST(Pose2, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100, 100), th(-4, 4);
  for (int k = 0; k < 100; ++k) {
    const Pose2 p(u(rng), u(rng), th(rng));
    const Pose2 id = p.compose(p.inverse());
    EXPECT_NEAR(id.x, 0.0, 1e-9);
    EXPECT_NEAR(id.y, 0.0, 1e-9);
    EXPECT_NEAR(id.theta, 0.0, 1e-9);
  }
}

TEST(TransformPoints, IdentityPose) {
  const Points in{{1, 2}};
  const auto out = transform_points(Pose2{}, in, Direction::kEgoToWorld);
  EXPECT_EQ(out[0], (Vec2{1, 2}));
}

TEST(TransformPoints, QuarterTurn) {
  const Points in{{1, 0}};
  const auto out = transform_points(Pose2(0, 0, std::numbers::pi / 2), in, Direction::kEgoToWorld);
  EXPECT_NEAR(out[0].x, 0.0, 1e-12);
  EXPECT_NEAR(out[0].y, 1.0, 1e-12);
}

TEST(TransformPoints, MatchesMatrixProduct) {
  const Pose2 pose(3, 4, std::numbers::pi);
  const auto out = transform_points(pose, Points{{1, 0}}, Direction::kEgoToWorld);
  EXPECT_NEAR(out[0].x, 2.0, 1e-12);
  EXPECT_NEAR(out[0].y, 4.0, 1e-12);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50, 50), th(-3.1, 3.1);
  for (int k = 0; k < 50; ++k) {
    const Pose2 p(u(rng), u(rng), th(rng));
    const Vec2 q{u(rng), u(rng)};
    Eigen::Matrix3d m;
    m << std::cos(p.theta), -std::sin(p.theta), p.x, std::sin(p.theta), std::cos(p.theta), p.y, 0, 0, 1;
    const Eigen::Vector3d w = m * Eigen::Vector3d(q.x, q.y, 1.0);
    const Eigen::Vector3d e = m.inverse() * Eigen::Vector3d(q.x, q.y, 1.0);
    const Points in{q};
    const auto tw = transform_points(p, in, Direction::kEgoToWorld);
    const auto te = transform_points(p, in, Direction::kWorldToEgo);
    EXPECT_NEAR(tw[0].x, w.x(), 1e-9);
    EXPECT_NEAR(tw[0].y, w.y(), 1e-9);
    EXPECT_NEAR(te[0].x, e.x(), 1e-9);
    EXPECT_NEAR(te[0].y, e.y(), 1e-9);
  }
}

TEST(TransformPoints, RoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-500, 500), th(-3.2, 3.2);
  for (int k = 0; k < 1000; ++k) {
    const Pose2 p(u(rng), u(rng), th(rng));
    const Points in{{u(rng), u(rng)}};
    const auto back = transform_points(p, transform_points(p, in, Direction::kEgoToWorld), Direction::kWorldToEgo);
    EXPECT_LT(distance(back[0], in[0]), 1e-9);
  }
}

TEST(Polyline, RejectsDegenerate) {
  EXPECT_THROW(Polyline({{0, 0}}), Error);
  EXPECT_THROW(Polyline({{0, 0}, {0, 0}}), Error);
  const Polyline l({{0, 0}, {0, 0}, {1, 0}});
  EXPECT_EQ(l.size(), 2u);
}

TEST(Polygon, StoredCounterClockwise) {
  const Polygon cw({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_GT(signed_area(cw.ring()), 0.0);
  EXPECT_DOUBLE_EQ(cw.area(), 1.0);
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}, {2, 0}}), Error);
}

TEST(Rect, RejectsNonPositiveExtent) {
  EXPECT_THROW(Rect(Pose2{}, 0.0, 1.0), Error);
  EXPECT_THROW(Rect(Pose2{}, 1.0, -1.0), Error);
}

TEST(Chamfer, Examples) {
  const Points a{{0, 0}, {1, 0}, {5, 5}};
  EXPECT_DOUBLE_EQ(chamfer_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(chamfer_distance(Points{{0, 0}}, Points{{3, 4}}), 5.0);
  const Points p{{0, 0}, {1, 0}}, q{{0, 1}};
  EXPECT_NEAR(chamfer_distance(p, q), oracle::brute_chamfer(p, q), 1e-12);
  EXPECT_NEAR(chamfer_distance(p, q), 1.10355, 1e-5);
  EXPECT_THROW(chamfer_distance(Points{}, q), Error);
}

TEST(Chamfer, SymmetricAndRigidInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20), th(-3, 3);
  for (int k = 0; k < 50; ++k) {
    Points p, q;
    for (int i = 0; i < 1 + k % 7; ++i) p.push_back({u(rng), u(rng)});
    for (int i = 0; i < 1 + k % 5; ++i) q.push_back({u(rng), u(rng)});
    EXPECT_EQ(chamfer_distance(p, q), chamfer_distance(q, p));
    EXPECT_NEAR(chamfer_distance(p, q), oracle::brute_chamfer(p, q), 1e-12);
    const Pose2 t(u(rng), u(rng), th(rng));
    const auto tp = transform_points(t, p, Direction::kEgoToWorld), tq = transform_points(t, q, Direction::kEgoToWorld);
    EXPECT_NEAR(chamfer_distance(tp, tq), chamfer_distance(p, q), 1e-9);
  }
}

TEST(CurveChamfer, TranslatedLineIsOffset) {
  const Points a{{0, 0}, {50, 0}}, b{{0, 1}, {50, 1}};
  EXPECT_NEAR(curve_chamfer(CurveRef{a, false}, CurveRef{b, false}, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(curve_chamfer(CurveRef{a, false}, CurveRef{a, false}, 0.5), 0.0, 1e-12);
}

TEST(ClipPolyline, InsideUnchanged) {
  const Polyline l({{-1, 0}, {1, 1}, {2, -1}});
  const auto out = clip_polyline_to_rect(l, Rect(Pose2{}, 5, 5));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].points(), l.points());
}

TEST(ClipPolyline, SymmetricCrossing) {
  const auto out = clip_polyline_to_rect(Polyline({{-10, 0}, {10, 0}}), Rect(Pose2{}, 5, 5));
  ASSERT_EQ(out.size(), 1u);
  ASSERT_EQ(out[0].size(), 2u);
  EXPECT_NEAR(out[0].front().x, -5.0, 1e-12);
  EXPECT_NEAR(out[0].back().x, 5.0, 1e-12);
}

TEST(ClipPolyline, OutsideIsEmpty) {
  EXPECT_TRUE(clip_polyline_to_rect(Polyline({{20, 20}, {30, 20}}), Rect(Pose2{}, 5, 5)).empty());
}

TEST(ClipPolyline, UShapeMatchesDenseSampling) {
  const Polyline u({{-8, 3}, {4, 3}, {4, -3}, {-8, -3}});
  const Rect rect(Pose2(0.5, 0.2, 0.1), 3, 6);
  const auto pieces = clip_polyline_to_rect(u, rect);
  ASSERT_EQ(pieces.size(), 2u);
  double total = 0.0;
  for (const auto& p : pieces) {
    total += p.length();
    for (const Vec2& q : p.points()) EXPECT_TRUE(rect.contains(q, 1e-9));
  }
  const double expected = oracle::inside_length(u.points(), rect, 10000);
  EXPECT_NEAR(total, expected, 1e-3 * expected);
}

TEST(ClipPolyline, LengthConservation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-15, 15);
  const Rect rect(Pose2(1, -1, 0.4), 6, 4);
  for (int k = 0; k < 30; ++k) {
    Points pts;
    for (int i = 0; i < 8; ++i) pts.push_back({u(rng), u(rng)});
    const Polyline line(pts);
    double inside = 0.0;
    for (const auto& p : clip_polyline_to_rect(line, rect, 0.0)) inside += p.length();
    const double outside = line.length() - oracle::inside_length(line.points(), rect, 200000);
    EXPECT_NEAR(inside + outside, line.length(), 1e-3 * line.length());
  }
}

TEST(ClipPolyline, DropsShortSlivers) {
  // Only 0.3 m of the line pokes into the rect.
  const auto out = clip_polyline_to_rect(Polyline({{4.7, -10}, {4.7, 10}, {20, 10}}), Rect(Pose2{}, 5, 0.15));
  EXPECT_TRUE(out.empty());
}

TEST(ResampleEven, SegmentSpacing) {
  const auto out = resample_even(Polyline({{0, 0}, {10, 0}}), 6);
  ASSERT_EQ(out.size(), 6u);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(out.points()[k].x, 2.0 * k, 1e-12);
}

TEST(ResampleEven, TwoPointsAreEndpoints) {
  const Polyline l({{1, 1}, {2, 5}, {7, 3}});
  const auto out = resample_even(l, 2);
  EXPECT_EQ(out.front(), l.front());
  EXPECT_EQ(out.back(), l.back());
  EXPECT_THROW(resample_even(l, 1), Error);
}

TEST(ResampleEven, QuarterCircleEqualChords) {
  Points arc;
  for (int k = 0; k < 100; ++k) {
    const double a = 0.5 * std::numbers::pi * k / 99.0;
    arc.push_back({10 * std::cos(a), 10 * std::sin(a)});
  }
  const Polyline line(arc);
  const auto out = resample_even(line, 11);
  // Arc-length oracle: point k sits at arc length k*L/10 along the input.
  for (int k = 0; k <= 10; ++k) {
    const Vec2 want = oracle::point_at_arc_length(arc, line.length() * k / 10.0);
    EXPECT_LT(distance(out.points()[k], want), 1e-9);
  }
  const double first = distance(out.points()[0], out.points()[1]);
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    EXPECT_NEAR(distance(out.points()[k], out.points()[k + 1]), first, 1e-3 * first);
  }
  EXPECT_NEAR(resample_even(line, 20).length(), line.length(), 0.01 * line.length());
}

TEST(ClipPolygon, InsideUnchanged) {
  const Polygon p({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto out = clip_polygon_to_rect(p, Rect(Pose2{}, 5, 5));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ring(), p.ring());
}

TEST(ClipPolygon, SquareAtCornerIsQuarter) {
  const Polygon p({{4.5, 4.5}, {5.5, 4.5}, {5.5, 5.5}, {4.5, 5.5}});
  const auto out = clip_polygon_to_rect(p, Rect(Pose2{}, 5, 5));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].area(), 0.25, 1e-12);
}

TEST(ClipPolygon, RandomQuadMatchesRaster) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-6, 6);
  const Rect rect(Pose2(0.3, 0.1, 0.2), 3, 2);
  int checked = 0;
  while (checked < 20) {
    const auto quad = oracle::random_convex_quad(rng, {u(rng) * 0.3, u(rng) * 0.3}, 2.0, 4.0);
    const Polygon p(quad);
    const auto out = clip_polygon_to_rect(p, rect);
    const Vec2 lo{-6, -6}, hi{6, 6};
    const double raster = oracle::raster_area(lo, hi, 1000, [&](Vec2 q) {
      return oracle::inside_ring(q, p.ring()) && rect.contains(q, 0.0);
    });
    if (raster < 0.5) continue;
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR(out[0].area(), raster, 0.01 * raster);
    EXPECT_LE(out[0].area(), std::min(p.area(), rect.area()) + 1e-9);
    ++checked;
  }
}

TEST(ClipPolygon, OutsideIsEmpty) {
  EXPECT_TRUE(clip_polygon_to_rect(Polygon({{10, 10}, {11, 10}, {11, 11}}), Rect(Pose2{}, 5, 5)).empty());
}
