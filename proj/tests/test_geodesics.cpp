#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "contraq/geodesics.hpp"
#include "oracles/grid_paths.hpp"

using namespace contraq;

namespace {

Polygon wall(double x0, double y0, double x1, double y1) { return {{Point2(x0, y0), Point2(x1, y1)}}; }

Polygon box(double x0, double y0, double x1, double y1) {
  return {{Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)}};
}

PolygonalWorld double_slit(const Point2& target) {
  PolygonalWorld w;
  w.obstacles = {wall(0, -1, 0, 1), wall(0, 2, 0, 10), wall(0, -2, 0, -10)};
  w.source = Point2(-4, 0);
  w.target = target;
  return w;
}

std::vector<oracle::GridShape> shapes_of(const PolygonalWorld& w) {
  std::vector<oracle::GridShape> out;
  for (const auto& p : w.obstacles) out.push_back({p.vertices});
  return out;
}

double angle_of(const Point2& d) { return std::atan2(d.y(), d.x()); }

}  // namespace

TEST_CASE("no obstacles gives the straight segment") {
  PolygonalWorld w;
  w.source = Point2(-1, 2);
  w.target = Point2(3, -1);
  const auto paths = shortest_paths(w, 3);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].length == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(paths[0].corners.empty());
  CHECK(paths[0].vertices.size() == 2);
}

TEST_CASE("symmetric double slit") {
  const PolygonalWorld w = double_slit(Point2(4, 0));
  const auto paths = shortest_paths(w, 3);
  REQUIRE(paths.size() == 3);
  const double expect = 2.0 * std::sqrt(17.0);
  CHECK(std::abs(paths[0].length - expect) < 1e-12);
  CHECK(std::abs(paths[1].length - paths[0].length) / paths[0].length < 1e-12);
  CHECK(paths[2].length > paths[0].length * (1 + 1e-6));
  REQUIRE(paths[0].corners.size() == 1);
  REQUIRE(paths[1].corners.size() == 1);
  // tie broken by corner order: (0,-1) is vertex 0 of the middle wall
  CHECK(paths[0].corners[0] == Corner{0, 0});
  CHECK(paths[1].corners[0] == Corner{0, 1});
  CHECK(paths[0].vertices[1] == Point2(0, -1));
  CHECK(paths[1].vertices[1] == Point2(0, 1));

  const auto rows = path_table(paths, 1.0);
  CHECK(rows[0].action_difference == 0.0);
  CHECK(rows[1].action_difference == 0.0);
  CHECK(rows[0].travel_time == rows[1].travel_time);
}

TEST_CASE("displaced target orders the slits") {
  const PolygonalWorld w = double_slit(Point2(4, 1));
  const auto paths = shortest_paths(w, 2);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].vertices[1] == Point2(0, 1));
  CHECK(paths[1].vertices[1] == Point2(0, -1));
  CHECK(paths[0].length == doctest::Approx(std::sqrt(17.0) + 4.0).epsilon(1e-14));
  CHECK(paths[1].length == doctest::Approx(std::sqrt(17.0) + std::sqrt(20.0)).epsilon(1e-14));
  CHECK(paths[0].length < paths[1].length);

  const double speed = 2.5;
  const auto rows = path_table(paths, speed);
  CHECK(rows[1].action_difference == doctest::Approx(0.5 * speed * (paths[1].length - paths[0].length)));
  CHECK(rows[1].travel_time_difference == doctest::Approx((paths[1].length - paths[0].length) / speed));
  CHECK(rows[0].action == doctest::Approx(0.5 * speed * paths[0].length));
}

TEST_CASE("slit paths agree with the grid oracle") {
  for (const Point2 target : {Point2(4, 0), Point2(4, 1)}) {
    const PolygonalWorld w = double_slit(target);
    const auto paths = shortest_paths(w, 2);
    for (const auto& p : paths) {
      // Close the other slit so the oracle measures this path's homotopy class.
      std::vector<oracle::GridShape> shapes = shapes_of(w);
      const bool upper = p.vertices[1].y() > 0;
      shapes.push_back({{Eigen::Vector2d(0, upper ? -2.0 : 1.0), Eigen::Vector2d(0, upper ? -1.0 : 2.0)}});
      const oracle::GridPaths grid(shapes, -5.0, 5.0);
      const double ref = grid.shortest(w.source, w.target);
      CHECK(std::abs(p.length - ref) / ref < 0.015);
    }
  }
}

TEST_CASE("thick single slit bends around two corners") {
  PolygonalWorld w;
  w.obstacles = {box(-0.25, 0.5, 0.25, 10), box(-0.25, -10, 0.25, -0.5)};
  w.source = Point2(-4, 3);
  w.target = Point2(4, 3);
  const auto paths = shortest_paths(w, 1);
  REQUIRE(paths.size() == 1);
  REQUIRE(paths[0].corners.size() == 2);
  CHECK(paths[0].vertices[1] == Point2(-0.25, 0.5));
  CHECK(paths[0].vertices[2] == Point2(0.25, 0.5));
  const double leg = std::hypot(3.75, 2.5);
  CHECK(paths[0].length == doctest::Approx(2 * leg + 0.5).epsilon(1e-14));

  const oracle::GridPaths grid(shapes_of(w), -5.0, 5.0);
  CHECK(std::abs(paths[0].length - grid.shortest(w.source, w.target)) / paths[0].length < 0.015);

  const AngularSector s = free_sector(w, paths[0]);
  CHECK(s.width == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  const auto fan = corner_fan(w, paths[0], 7);
  REQUIRE(fan.size() == 7);
  const double to_target = angle_of(w.target - Point2(0.25, 0.5));
  CHECK(to_target >= s.start - 1e-12);
  CHECK(to_target <= s.start + s.width + 1e-12);
}

TEST_CASE("corner_fan sectors") {
  using std::numbers::pi;
  SUBCASE("corner of a block reached along its face") {
    PolygonalWorld w;
    w.obstacles = {box(-10, -10, 0, 0)};
    GeodesicPath p;
    p.vertices = {Point2(0, 1), Point2(0, 0), Point2(1, -1)};
    p.corners = {Corner{0, 2}};
    REQUIRE(w.obstacles[0].vertices[2] == Point2(0, 0));
    const AngularSector s = free_sector(w, p);
    CHECK(s.width == doctest::Approx(pi / 2).epsilon(1e-14));
    const auto fan = corner_fan(w, p, 3);
    REQUIRE(fan.size() == 3);
    CHECK((fan[0] - Point2(0, -1)).norm() < 1e-14);
    CHECK((fan[1] - Point2(std::sqrt(0.5), -std::sqrt(0.5))).norm() < 1e-14);
    CHECK((fan[2] - Point2(1, 0)).norm() < 1e-14);
  }
  SUBCASE("thin wall tip") {
    PolygonalWorld w;
    w.obstacles = {wall(0, 1, 0, -5)};
    GeodesicPath p;
    p.vertices = {Point2(-1, 1), Point2(0, 1), Point2(1, 0)};
    p.corners = {Corner{0, 0}};
    const AngularSector s = free_sector(w, p);
    CHECK(s.width == doctest::Approx(pi).epsilon(1e-14));
    const auto fan = corner_fan(w, p, 5);
    REQUIRE(fan.size() == 5);
    for (int i = 0; i < 5; ++i) {
      const double a = s.start + i * pi / 4;
      CHECK((fan[static_cast<size_t>(i)] - Point2(std::cos(a), std::sin(a))).norm() < 1e-14);
    }
    CHECK(corner_fan(w, p, 1).size() == 1);
    CHECK((corner_fan(w, p, 1)[0] - Point2(1, 0)).norm() < 1e-14);
  }
  SUBCASE("double slit corner passes straight through") {
    const PolygonalWorld w = double_slit(Point2(4, 0));
    const auto paths = shortest_paths(w, 1);
    const Point2 din = (paths[0].vertices[1] - paths[0].vertices[0]).normalized();
    const AngularSector s = free_sector(w, paths[0]);
    double rel = angle_of(din) - s.start;
    while (rel < 0) rel += 2 * pi;
    CHECK(rel <= s.width + 1e-12);
    const auto fan = corner_fan(w, paths[0], 181);
    double best = -1.0;
    for (const auto& d : fan) best = std::max(best, d.dot(din));
    CHECK(best > std::cos(pi / 180));
  }
  SUBCASE("no corner") {
    PolygonalWorld w;
    w.target = Point2(1, 0);
    CHECK(corner_fan(w, shortest_paths(w, 1)[0], 3).empty());
  }
}

TEST_CASE("unreachable and invalid worlds") {
  PolygonalWorld w;
  w.obstacles = {box(-2, 1, 2, 2), box(-2, -2, 2, -1), box(-2, -2, -1, 2), box(1, -2, 2, 2)};
  w.source = Point2(5, 5);
  w.target = Point2(0, 0);
  bool unreachable = false;
  try {
    shortest_paths(w, 1);
  } catch (const Error& e) {
    unreachable = e.kind() == ErrorKind::Unreachable;
  }
  CHECK(unreachable);

  PolygonalWorld inside;
  inside.obstacles = {box(-1, -1, 1, 1)};
  inside.source = Point2(0, 0);
  inside.target = Point2(3, 0);
  CHECK_THROWS_AS(shortest_paths(inside, 1), Error);

  PolygonalWorld bowtie;
  bowtie.obstacles = {{{Point2(0, 0), Point2(1, 1), Point2(1, 0), Point2(0, 1)}}};
  bowtie.source = Point2(-3, 0);
  bowtie.target = Point2(3, 0);
  CHECK_THROWS_AS(shortest_paths(bowtie, 1), Error);
  CHECK_THROWS_AS(shortest_paths(double_slit(Point2(4, 0)), 0), Error);
  CHECK_THROWS_AS(path_table({}, 0.0), Error);
}

TEST_CASE("random triangle fields") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(-3.0, 3.0), ur(0.2, 0.9);
  for (int trial = 0; trial < 40; ++trial) {
    PolygonalWorld w;
    w.source = Point2(-5, 0);
    w.target = Point2(5, 0);
    for (int k = 0; k < 5; ++k) {
      const Point2 c(ux(rng), uy(rng));
      const double r = ur(rng), phase = ux(rng);
      Polygon tri;
      for (int v = 0; v < 3; ++v) {
        const double a = phase + 2.0 * std::numbers::pi * v / 3.0;
        tri.vertices.emplace_back(c.x() + r * std::cos(a), c.y() + r * std::sin(a));
      }
      w.obstacles.push_back(tri);
    }
    const auto paths = shortest_paths(w, 3);
    REQUIRE(!paths.empty());
    for (size_t i = 0; i < paths.size(); ++i) {
      CHECK(paths[i].length >= 10.0 - 1e-12);
      if (i > 0) CHECK(paths[i].length >= paths[i - 1].length);
      for (size_t s = 1; s < paths[i].vertices.size(); ++s)
        CHECK(segment_clear(w, paths[i].vertices[s - 1], paths[i].vertices[s]));
    }
    for (size_t drop = 0; drop < w.obstacles.size(); ++drop) {
      PolygonalWorld fewer = w;
      fewer.obstacles.erase(fewer.obstacles.begin() + static_cast<long>(drop));
      CHECK(shortest_paths(fewer, 1)[0].length <= paths[0].length + 1e-12);
    }
    if (trial < 4) {
      const oracle::GridPaths grid(shapes_of(w), -6.0, 6.0);
      const double ref = grid.shortest(w.source, w.target);
      CHECK(std::abs(paths[0].length - ref) / paths[0].length < 0.015);
    }
  }
}
