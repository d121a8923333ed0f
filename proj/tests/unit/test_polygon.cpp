#include <random>

#include <gtest/gtest.h>

#include "icmap/polygon.hpp"
#include "oracles.hpp"

using namespace icmap;

namespace {

Polygon square(double x, double y, double side = 1.0) {
  return Polygon({{x, y}, {x + side, y}, {x + side, y + side}, {x, y + side}});
}

}  // namespace

TEST(PolygonArea, Examples) {
  EXPECT_DOUBLE_EQ(polygon_area(square(0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(Polygon({{0, 0}, {2, 0}, {0, 2}})), 2.0);
}

TEST(PolygonArea, RandomSimpleMatchesRaster) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> r(1.0, 3.0);
  for (int k = 0; k < 5; ++k) {
    // Star-shaped (hence simple) polygon with 9 vertices.
    Points ring;
    for (int i = 0; i < 9; ++i) {
      const double a = 2 * std::numbers::pi * i / 9;
      const double rad = r(rng);
      ring.push_back({rad * std::cos(a), rad * std::sin(a)});
    }
    const Polygon p(ring);
    const double raster = oracle::raster_area({-3, -3}, {3, 3}, 1000, [&](Vec2 q) { return oracle::inside_ring(q, ring); });
    EXPECT_NEAR(p.area(), raster, 0.005 * raster);
  }
}

TEST(Rasterize, Examples) {
  const Polygon unit = square(0, 0);
  EXPECT_EQ(rasterize_count(std::span<const Polygon>(&unit, 1), {0, 0}, {1, 1}, 1000), 1000000u);
  const Polygon half({{0, 0}, {0.5, 0}, {0.5, 1}, {0, 1}});
  const double frac = rasterize_count(std::span<const Polygon>(&half, 1), {0, 0}, {1, 1}, 1000) / 1e6;
  EXPECT_NEAR(frac, 0.5, 0.002);
  EXPECT_THROW(rasterize_count(std::span<const Polygon>(&half, 1), {0, 0}, {1, 1}, 50), Error);
}

TEST(PolygonUnion, Idempotent) {
  const Polygon a({{0, 0}, {3, 0.5}, {2.5, 2}, {0.2, 1.5}});
  const auto u = polygon_union(a, a);
  ASSERT_TRUE(u);
  EXPECT_NEAR(u->area(), a.area(), 1e-12);
  EXPECT_TRUE(oracle::same_ring_up_to_rotation(u->ring(), a.ring()));
}

TEST(PolygonUnion, OffsetUnitSquares) {
  const auto u = polygon_union(square(0, 0), square(0.5, 0.5));
  ASSERT_TRUE(u);
  EXPECT_NEAR(u->area(), 1.75, 1e-12);
  EXPECT_EQ(u->size(), 8u);
  EXPECT_GT(signed_area(u->ring()), 0.0);
}

TEST(PolygonUnion, ContainmentAndDisjoint) {
  const auto inner = polygon_union(square(0, 0, 4), square(1, 1));
  ASSERT_TRUE(inner);
  EXPECT_NEAR(inner->area(), 16.0, 1e-12);
  const auto outer = polygon_union(square(1, 1), square(0, 0, 4));
  ASSERT_TRUE(outer);
  EXPECT_NEAR(outer->area(), 16.0, 1e-12);
  EXPECT_FALSE(polygon_union(square(0, 0), square(5, 5)));
}

TEST(PolygonUnion, SharedEdge) {
  const auto u = polygon_union(square(0, 0), square(1, 0));
  ASSERT_TRUE(u);
  EXPECT_NEAR(u->area(), 2.0, 1e-12);
  EXPECT_EQ(u->size(), 4u);
}

TEST(PolygonUnion, RejectsNonSimple) {
  // Bow tie: the constructor accepts it only if area is nonzero, so build a lopsided one.
  const Points bowtie{{0, 0}, {4, 2}, {4, 0}, {0, 3}};
  EXPECT_FALSE(is_simple(bowtie));
  EXPECT_THROW(polygon_union(Polygon(bowtie), square(0, 0)), Error);
}

TEST(PolygonUnion, RandomQuadsProperties) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> off(-1.5, 1.5);
  int done = 0;
  while (done < 60) {
    const Polygon a(oracle::random_convex_quad(rng, {0, 0}, 1.0, 2.5));
    const Polygon b(oracle::random_convex_quad(rng, {off(rng), off(rng)}, 1.0, 2.5));
    const auto ab = polygon_union(a, b);
    const auto ba = polygon_union(b, a);
    ASSERT_EQ(ab.has_value(), ba.has_value());
    if (!ab) continue;
    EXPECT_NEAR(ab->area(), ba->area(), 1e-9);
    EXPECT_TRUE(oracle::same_ring_up_to_rotation(ab->ring(), ba->ring(), 1e-9));
    EXPECT_GE(ab->area(), std::max(a.area(), b.area()) - 1e-9);
    EXPECT_LE(ab->area(), a.area() + b.area() + 1e-9);
    EXPECT_TRUE(is_simple(ab->ring()));
    const double raster = oracle::raster_area({-5, -5}, {5, 5}, 400, [&](Vec2 q) {
      return oracle::inside_ring(q, a.ring()) || oracle::inside_ring(q, b.ring());
    });
    EXPECT_NEAR(ab->area(), raster, 0.02 * raster);
    ++done;
  }
}
