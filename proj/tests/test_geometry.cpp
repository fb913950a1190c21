#include <cmath>
#include <numbers>

#include "doctest.h"
#include "replan/error.hpp"
#include "replan/geometry.hpp"
#include "replan/rng.hpp"

using namespace replan;

TEST_CASE("square of side 100") {
  const Polygon sq({{0, 0}, {100, 0}, {100, 100}, {0, 100}});
  const auto a = plot_attributes(sq);
  CHECK(a.area == doctest::Approx(10000.0));
  CHECK(a.perimeter == doctest::Approx(400.0));
  CHECK(a.compactness == doctest::Approx(std::numbers::pi / 4.0));
  CHECK(a.centroid.x == doctest::Approx(50.0));
  CHECK(a.centroid.y == doctest::Approx(50.0));
}

TEST_CASE("right triangle area and centroid") {
  const auto a = plot_attributes(Polygon({{0, 0}, {100, 0}, {0, 100}}));
  CHECK(a.area == doctest::Approx(5000.0));
  CHECK(a.centroid.x == doctest::Approx(100.0 / 3.0));
  CHECK(a.centroid.y == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("360-gon is nearly a circle") {
  std::vector<Point> ring;
  for (int i = 0; i < 360; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 360.0;
    ring.push_back({1000.0 + 250.0 * std::cos(t), -40.0 + 250.0 * std::sin(t)});
  }
  const auto a = plot_attributes(Polygon(ring));
  CHECK(a.compactness == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(a.compactness <= 1.0);
}

TEST_CASE("clockwise rings and a repeated closing vertex") {
  const Polygon cw({{0, 0}, {0, 100}, {100, 100}, {100, 0}, {0, 0}});
  CHECK(cw.size() == 4);
  CHECK(signed_area(cw.ring()) < 0.0);
  CHECK(plot_attributes(cw).area == doctest::Approx(10000.0));
  CHECK(plot_attributes(cw).centroid.x == doctest::Approx(50.0));
}

TEST_CASE("invalid polygons are rejected") {
  CHECK_THROWS_AS(Polygon({{0, 0}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(Polygon({{0, 0}, {1, 1}, {2, 2}}), ValidationError);  // zero area
  CHECK_THROWS_AS(Polygon({{0, 0}, {10, 10}, {10, 0}, {0, 10}}), ValidationError);  // bow tie
  CHECK_THROWS_AS(Polygon({{0, 0}, {NAN, 0}, {0, 1}}), ValidationError);
  CHECK_FALSE(is_simple(std::vector<Point>{{0, 0}, {10, 10}, {10, 0}, {0, 10}}));
  CHECK(is_simple(std::vector<Point>{{0, 0}, {10, 0}, {10, 10}, {0, 10}}));
}

TEST_CASE("concave L shape") {
  const auto a = plot_attributes(Polygon({{0, 0}, {20, 0}, {20, 10}, {10, 10}, {10, 20}, {0, 20}}));
  CHECK(a.area == doctest::Approx(300.0));
  CHECK(a.perimeter == doctest::Approx(80.0));
  // Union of a 20x10 bar (centroid 10,5) and a 10x10 block (centroid 5,15).
  CHECK(a.centroid.x == doctest::Approx((200.0 * 10 + 100.0 * 5) / 300.0));
  CHECK(a.centroid.y == doctest::Approx((200.0 * 5 + 100.0 * 15) / 300.0));
}

TEST_CASE("far-from-origin coordinates keep precision") {
  const double ox = 4.5e6, oy = 5.8e6;
  const auto a = plot_attributes(Polygon({{ox, oy}, {ox + 100, oy}, {ox + 100, oy + 100}, {ox, oy + 100}}));
  CHECK(a.area == doctest::Approx(10000.0).epsilon(1e-9));
  CHECK(a.centroid.x == doctest::Approx(ox + 50.0));
}

TEST_CASE("distance") {
  CHECK(distance({0, 0}, {300, 400}) == 500.0);
  CHECK(distance({7, -3}, {7, -3}) == 0.0);
  CHECK(distance({0, 0}, {1, 1}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("distance is a metric on random points") {
  Rng rng(5);
  auto pt = [&] { return Point{rng.uniform() * 2000 - 1000, rng.uniform() * 2000 - 1000}; };
  for (int i = 0; i < 1000; ++i) {
    const Point a = pt(), b = pt(), c = pt();
    CHECK(distance(a, b) == distance(b, a));
    CHECK(distance(a, b) >= 0.0);
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
  }
}

TEST_CASE("disk union membership") {
  const std::vector<Point> c1{{0, 400}};
  const std::vector<Point> c2{{0, 600}};
  const std::vector<Point> c3{{300, 400}};
  CHECK(in_disk_union({0, 0}, c1, 500));
  CHECK_FALSE(in_disk_union({0, 0}, c2, 500));
  CHECK(in_disk_union({0, 0}, c3, 500));  // exactly on the boundary
  CHECK_FALSE(in_disk_union({0, 0}, std::vector<Point>{}, 500));
  CHECK_THROWS_AS(in_disk_union({0, 0}, c1, 0.0), ValidationError);
}

TEST_CASE("disk union agrees with brute-force minimum distance") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point> centers;
    const auto n = rng.below(6);
    for (std::uint64_t i = 0; i < n; ++i) centers.push_back({rng.uniform() * 3000, rng.uniform() * 3000});
    const Point p{rng.uniform() * 3000, rng.uniform() * 3000};
    double best = INFINITY;
    for (const auto& c : centers) best = std::min(best, std::hypot(p.x - c.x, p.y - c.y));
    CHECK(in_disk_union(p, centers, 500.0) == (best <= 500.0));
  }
}
