#ifndef CONTRAQ_GEODESICS_HPP_
#define CONTRAQ_GEODESICS_HPP_

#include <vector>

#include "contraq/core.hpp"

namespace contraq {

using Point2 = Eigen::Vector2d;

// Two vertices describe a zero-thickness wall segment; three or more a simple
// polygon whose interior is excluded.
struct Polygon {
  std::vector<Point2> vertices;

  bool is_wall() const { return vertices.size() == 2; }
};

struct PolygonalWorld {
  std::vector<Polygon> obstacles;
  Point2 source = Point2::Zero();
  Point2 target = Point2::Zero();

  // InvalidArgument for degenerate or self-intersecting polygons and for
  // endpoints inside an obstacle.
  void validate() const;
};

struct Corner {
  int obstacle = -1;
  int vertex = -1;

  friend bool operator==(const Corner&, const Corner&) = default;
  friend auto operator<=>(const Corner&, const Corner&) = default;
};

struct GeodesicPath {
  std::vector<Point2> vertices;  // source, corners..., target
  std::vector<Corner> corners;
  double length = 0.0;
  double travel_time = 0.0;  // length / speed
  double action = 0.0;       // 1/2 speed * length, unit mass
};

/// True when the open segment ab avoids every obstacle interior and crosses
/// no wall. Touching boundaries (within 1e-12) is allowed.
bool segment_clear(const PolygonalWorld& world, const Point2& a, const Point2& b);

/// k shortest simple paths of the visibility graph over source, target and
/// all obstacle vertices, as distinct corner sequences, shortest first; equal
/// lengths are ordered by corner sequence. Unreachable if none exists.
std::vector<GeodesicPath> shortest_paths(const PolygonalWorld& world, int k, double speed = 1.0);

/// Free angular sector at a path's last corner: the forward half-plane of the
/// incoming direction minus the obstacle's interior wedge. The largest
/// contiguous piece, counter-clockwise from `start` (radians).
struct AngularSector {
  double start = 0.0;
  double width = 0.0;
};
AngularSector free_sector(const PolygonalWorld& world, const GeodesicPath& path);

/// `count` unit directions spread uniformly over free_sector, both ends
/// included (a single direction sits at the middle). Empty without corners.
std::vector<Point2> corner_fan(const PolygonalWorld& world, const GeodesicPath& path, int count);

struct PathRow {
  double length = 0.0;
  double travel_time = 0.0;
  double action = 0.0;
  double action_difference = 0.0;       // against the shortest path
  double travel_time_difference = 0.0;
};

/// InvalidArgument unless speed > 0.
std::vector<PathRow> path_table(const std::vector<GeodesicPath>& paths, double speed);

}  // namespace contraq

#endif  // CONTRAQ_GEODESICS_HPP_
