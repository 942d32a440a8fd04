#include <doctest.h>

#include <random>

#include "qdcap/error.hpp"
#include "qdcap/polygon.hpp"
#include "support.hpp"

using namespace qdcap;

namespace {

Polygon2D square(double x0, double y0, double side) {
  return {{{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}}};
}

Polygon2D random_convex(std::mt19937& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), radius(40.0, 120.0);
  std::vector<double> a(9);
  for (auto& v : a) v = angle(rng);
  std::sort(a.begin(), a.end());
  // Points on an ellipse in angular order form a convex ring.
  const double rx = radius(rng), ry = radius(rng);
  Polygon2D p;
  for (double t : a) p.vertices.emplace_back(rx * std::cos(t), ry * std::sin(t));
  return normalized(p);
}

}  // namespace

TEST_SUITE("polygon") {
  TEST_CASE("square grows by thirty on every side") {
    const Polygon2D out = offset_polygon(square(0, 0, 100), 30.0);
    const Box2 b = bounds(out);
    CHECK(b.lo.x() == doctest::Approx(-30));
    CHECK(b.lo.y() == doctest::Approx(-30));
    CHECK(b.hi.x() == doctest::Approx(130));
    CHECK(b.hi.y() == doctest::Approx(130));
    CHECK(area(out) == doctest::Approx(160.0 * 160.0));
    CHECK(out.size() == 4);
  }

  TEST_CASE("zero offset is the identity") {
    std::mt19937 rng(7);
    for (int t = 0; t < 5; ++t) {
      const Polygon2D p = random_convex(rng);
      const Polygon2D q = offset_polygon(p, 0.0);
      REQUIRE(q.size() == p.size());
      for (std::size_t i = 0; i < p.size(); ++i) CHECK((q[i] - p[i]).norm() < 1e-12);
    }
  }

  TEST_CASE("grow then shrink keeps convex area within one percent") {
    std::mt19937 rng(11);
    for (int t = 0; t < 20; ++t) {
      const Polygon2D p = random_convex(rng);
      for (double d : {2.0, 5.0, 10.0}) {
        const Polygon2D back = offset_polygon(offset_polygon(p, d), -d);
        CHECK(std::abs(area(back) - area(p)) < 0.01 * area(p));
      }
    }
  }

  TEST_CASE("shrinking past collapse is an error") {
    CHECK_THROWS_AS(offset_polygon(square(0, 0, 20), -15.0), ValidationError);
  }

  TEST_CASE("sharp corners are beveled") {
    const Polygon2D spike{{{0, 0}, {100, 0}, {0, 10}}};
    const Polygon2D out = offset_polygon(spike, 5.0);
    for (const auto& v : out.vertices) CHECK(signed_distance(spike, v) <= 2.0 * 5.0 + 1e-9);
  }

  TEST_CASE("normalization orients counterclockwise and drops redundant vertices") {
    const Polygon2D cw{{{0, 0}, {0, 10}, {0, 10}, {5, 10}, {10, 10}, {10, 0}}};
    const Polygon2D n = normalized(cw);
    CHECK(n.size() == 4);
    CHECK(signed_area(n) == doctest::Approx(100.0));
  }

  TEST_CASE("degenerate rings are rejected") {
    CHECK_THROWS_AS(normalized(Polygon2D{{{0, 0}, {1, 1}}}), ValidationError);
    CHECK_THROWS_AS(normalized(Polygon2D{{{0, 0}, {1, 1}, {2, 2}}}), ValidationError);
    CHECK_THROWS_AS(normalized(Polygon2D{{{0, 0}, {1, 0}, {0, std::nan("")}}}), ValidationError);
  }

  TEST_CASE("containment and signed distance") {
    const Polygon2D s = square(0, 0, 10);
    CHECK(contains(s, {5, 5}));
    CHECK(contains(s, {0, 5}));
    CHECK_FALSE(contains(s, {11, 5}));
    CHECK(signed_distance(s, {5, 5}) == doctest::Approx(-5.0));
    CHECK(signed_distance(s, {13, 14}) == doctest::Approx(5.0));
  }

  TEST_CASE("simplicity and overlap") {
    const Polygon2D bow{{{0, 0}, {10, 10}, {10, 0}, {0, 10}}};
    CHECK_FALSE(is_simple(bow));
    CHECK(is_simple(square(0, 0, 1)));
    CHECK(polygons_overlap(square(0, 0, 10), square(5, 5, 10)));
    CHECK_FALSE(polygons_overlap(square(0, 0, 10), square(10, 0, 10)));
  }

  TEST_CASE("device sheets sit at least five nm outside the gate footprints") {
    const ProcessRecipe r = test::bundled("device1.json");
    const auto& sheets = r.mask("twodeg").polygons;
    const auto& gates = r.mask("poly").polygons;
    REQUIRE(sheets.size() == 7);
    REQUIRE(gates.size() == 8);
    for (std::size_t s = 1; s < sheets.size(); ++s) {
      double closest = 1e300;
      for (const auto& v : sheets[s].vertices)
        for (const auto& g : gates) {
          CHECK(signed_distance(g, v) >= 5.0 - 1e-6);
          closest = std::min(closest, signed_distance(g, v));
        }
      for (const auto& g : gates) CHECK_FALSE(polygons_overlap(g, sheets[s]));
      CHECK(closest < 5.5);
    }
  }
}
