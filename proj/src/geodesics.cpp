#include "contraq/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace contraq {

namespace {

constexpr double kGeomEps = 1e-12;
constexpr double kPi = std::numbers::pi;

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Orientation of c relative to ab: +1 left, -1 right, 0 collinear within eps.
int orient(const Point2& a, const Point2& b, const Point2& c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, (b - a).norm() * (c - a).norm()});
  if (v > kGeomEps * scale) return 1;
  if (v < -kGeomEps * scale) return -1;
  return 0;
}

bool proper_crossing(const Point2& a, const Point2& b, const Point2& p, const Point2& q) {
  const int o1 = orient(a, b, p), o2 = orient(a, b, q);
  const int o3 = orient(p, q, a), o4 = orient(p, q, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

double distance_to_segment(const Point2& x, const Point2& p, const Point2& q) {
  const Point2 d = q - p;
  const double len2 = d.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((x - p).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (x - (p + s * d)).norm();
}

bool strictly_inside(const Polygon& poly, const Point2& x) {
  const auto& v = poly.vertices;
  const size_t n = v.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i)
    if (distance_to_segment(x, v[i], v[(i + 1) % n]) <= kGeomEps) return false;
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y() > x.y()) != (v[j].y() > x.y())) {
      const double xc = v[j].x() + (x.y() - v[j].y()) * (v[i].x() - v[j].x()) / (v[i].y() - v[j].y());
      if (x.x() < xc) inside = !inside;
    }
  }
  return inside;
}

// Parameters along ab where it meets the polygon boundary.
std::vector<double> boundary_params(const Polygon& poly, const Point2& a, const Point2& b) {
  std::vector<double> ts{0.0, 1.0};
  const Point2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return ts;
  const auto& v = poly.vertices;
  const size_t n = v.size();
  for (size_t i = 0; i < n; ++i) {
    const double s = (v[i] - a).dot(d) / len2;
    if (s > 0.0 && s < 1.0) ts.push_back(s);
    const Point2& p = v[i];
    const Point2& q = v[(i + 1) % n];
    const double den = cross(d, q - p);
    if (std::abs(den) > kGeomEps) {
      const double t = cross(p - a, q - p) / den;
      const double u = cross(p - a, d) / den;
      if (t > 0.0 && t < 1.0 && u >= -kGeomEps && u <= 1.0 + kGeomEps) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  return ts;
}

struct Graph {
  std::vector<Point2> nodes;     // 0 = source, last = target
  std::vector<Corner> corner_of; // per node; source/target have obstacle -1
  std::vector<std::vector<double>> weight;  // +inf when not visible
};

Graph visibility_graph(const PolygonalWorld& world) {
  Graph g;
  g.nodes.push_back(world.source);
  g.corner_of.push_back({});
  for (size_t o = 0; o < world.obstacles.size(); ++o)
    for (size_t v = 0; v < world.obstacles[o].vertices.size(); ++v) {
      g.nodes.push_back(world.obstacles[o].vertices[v]);
      g.corner_of.push_back({static_cast<int>(o), static_cast<int>(v)});
    }
  g.nodes.push_back(world.target);
  g.corner_of.push_back({});
  const size_t n = g.nodes.size();
  g.weight.assign(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (segment_clear(world, g.nodes[i], g.nodes[j]))
        g.weight[i][j] = g.weight[j][i] = (g.nodes[j] - g.nodes[i]).norm();
  return g;
}

using NodePath = std::vector<int>;

double path_length(const Graph& g, const NodePath& p) {
  double len = 0.0;
  for (size_t k = 1; k < p.size(); ++k) len += g.weight[static_cast<size_t>(p[k - 1])][static_cast<size_t>(p[k])];
  return len;
}

// Dijkstra over the dense graph with removed nodes/edges. Equal distances
// keep the lexicographically smaller node sequence.
NodePath dijkstra(const Graph& g, int from, int to, const std::vector<bool>& removed_node,
                  const std::set<std::pair<int, int>>& removed_edge) {
  const size_t n = g.nodes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<NodePath> best(n);
  std::vector<bool> done(n, false);
  dist[static_cast<size_t>(from)] = 0.0;
  best[static_cast<size_t>(from)] = {from};
  for (;;) {
    int u = -1;
    for (size_t i = 0; i < n; ++i) {
      if (done[i] || removed_node[i] || !std::isfinite(dist[i])) continue;
      if (u < 0 || dist[i] < dist[static_cast<size_t>(u)] ||
          (dist[i] == dist[static_cast<size_t>(u)] && best[i] < best[static_cast<size_t>(u)]))
        u = static_cast<int>(i);
    }
    if (u < 0 || u == to) break;
    const auto uu = static_cast<size_t>(u);
    done[uu] = true;
    for (size_t v = 0; v < n; ++v) {
      if (done[v] || removed_node[v] || !std::isfinite(g.weight[uu][v])) continue;
      if (removed_edge.count({u, static_cast<int>(v)})) continue;
      const double nd = dist[uu] + g.weight[uu][v];
      NodePath cand = best[uu];
      cand.push_back(static_cast<int>(v));
      if (nd < dist[v] || (nd == dist[v] && cand < best[v])) {
        dist[v] = nd;
        best[v] = std::move(cand);
      }
    }
  }
  if (!std::isfinite(dist[static_cast<size_t>(to)])) return {};
  return best[static_cast<size_t>(to)];
}

GeodesicPath to_geodesic(const Graph& g, const NodePath& p, double speed) {
  GeodesicPath out;
  for (int id : p) {
    const auto i = static_cast<size_t>(id);
    out.vertices.push_back(g.nodes[i]);
    if (g.corner_of[i].obstacle >= 0) out.corners.push_back(g.corner_of[i]);
  }
  out.length = path_length(g, p);
  out.travel_time = out.length / speed;
  out.action = 0.5 * speed * out.length;
  return out;
}

double wrap(double a) {
  while (a <= -kPi) a += 2 * kPi;
  while (a > kPi) a -= 2 * kPi;
  return a;
}

}  // namespace

void PolygonalWorld::validate() const {
  if (!source.allFinite() || !target.allFinite())
    throw Error(ErrorKind::InvalidArgument, "source and target must be finite");
  for (size_t o = 0; o < obstacles.size(); ++o) {
    const auto& v = obstacles[o].vertices;
    if (v.size() < 2) throw Error(ErrorKind::InvalidArgument, "obstacle needs at least two vertices");
    for (const auto& p : v)
      if (!p.allFinite()) throw Error(ErrorKind::InvalidArgument, "obstacle vertex not finite");
    const size_t n = v.size();
    if (n >= 3) {
      for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
          if (j == i + 1 || (i == 0 && j == n - 1)) continue;
          if (proper_crossing(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
            throw Error(ErrorKind::InvalidArgument, "obstacle " + std::to_string(o) + " is not simple");
        }
    }
    if (strictly_inside(obstacles[o], source) || strictly_inside(obstacles[o], target))
      throw Error(ErrorKind::InvalidArgument, "source or target inside obstacle " + std::to_string(o));
  }
}

bool segment_clear(const PolygonalWorld& world, const Point2& a, const Point2& b) {
  for (const auto& poly : world.obstacles) {
    const auto& v = poly.vertices;
    const size_t n = v.size();
    const size_t edges = poly.is_wall() ? 1 : n;
    for (size_t i = 0; i < edges; ++i)
      if (proper_crossing(a, b, v[i], v[(i + 1) % n])) return false;
    if (poly.is_wall()) continue;
    const std::vector<double> ts = boundary_params(poly, a, b);
    for (size_t k = 1; k < ts.size(); ++k) {
      if (ts[k] - ts[k - 1] <= kGeomEps) continue;
      const Point2 mid = a + 0.5 * (ts[k - 1] + ts[k]) * (b - a);
      if (strictly_inside(poly, mid)) return false;
    }
  }
  return true;
}

std::vector<GeodesicPath> shortest_paths(const PolygonalWorld& world, int k, double speed) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  if (!(speed > 0.0)) throw Error(ErrorKind::InvalidArgument, "speed must be positive");
  world.validate();
  const Graph g = visibility_graph(world);
  const int src = 0;
  const int dst = static_cast<int>(g.nodes.size()) - 1;
  const std::vector<bool> none(g.nodes.size(), false);

  std::vector<NodePath> found;
  const NodePath first = dijkstra(g, src, dst, none, {});
  if (first.empty()) throw Error(ErrorKind::Unreachable, "target not reachable from source");
  found.push_back(first);

  // Yen's k shortest simple paths.
  auto less = [&](const NodePath& a, const NodePath& b) {
    const double la = path_length(g, a), lb = path_length(g, b);
    return la < lb || (la == lb && a < b);
  };
  std::set<NodePath, decltype(less)> candidates(less);
  while (static_cast<int>(found.size()) < k) {
    const NodePath& last = found.back();
    for (size_t i = 0; i + 1 < last.size(); ++i) {
      const NodePath root(last.begin(), last.begin() + static_cast<long>(i) + 1);
      std::set<std::pair<int, int>> cut;
      for (const auto& p : found)
        if (p.size() > i + 1 && std::equal(root.begin(), root.end(), p.begin())) {
          cut.insert({p[i], p[i + 1]});
          cut.insert({p[i + 1], p[i]});
        }
      std::vector<bool> removed(g.nodes.size(), false);
      for (size_t r = 0; r < i; ++r) removed[static_cast<size_t>(root[r])] = true;
      const NodePath spur = dijkstra(g, root.back(), dst, removed, cut);
      if (spur.empty()) continue;
      NodePath total = root;
      total.insert(total.end(), spur.begin() + 1, spur.end());
      if (std::find(found.begin(), found.end(), total) == found.end()) candidates.insert(total);
    }
    if (candidates.empty()) break;
    found.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }

  std::vector<GeodesicPath> out;
  for (const auto& p : found) out.push_back(to_geodesic(g, p, speed));
  return out;
}

AngularSector free_sector(const PolygonalWorld& world, const GeodesicPath& path) {
  if (path.corners.empty() || path.vertices.size() < 3) return {};
  const Corner c = path.corners.back();
  const auto& poly = world.obstacles[static_cast<size_t>(c.obstacle)];
  const size_t n = poly.vertices.size();
  const auto vi = static_cast<size_t>(c.vertex);
  const Point2 at = poly.vertices[vi];
  const Point2 prev = path.vertices[path.vertices.size() - 3];
  const Point2 din = (at - prev).normalized();
  const double theta_in = std::atan2(din.y(), din.x());

  // Blocked wedge in angles relative to theta_in, as [lo, hi].
  double lo = 0.0, hi = 0.0;
  if (poly.is_wall()) {
    const Point2 other = poly.vertices[1 - vi];
    lo = hi = wrap(std::atan2((other - at).y(), (other - at).x()) - theta_in);
  } else {
    const Point2 a = poly.vertices[(vi + 1) % n] - at;
    const Point2 b = poly.vertices[(vi + n - 1) % n] - at;
    double alo = wrap(std::atan2(a.y(), a.x()) - theta_in);
    double ahi = wrap(std::atan2(b.y(), b.x()) - theta_in);
    // Interior side: probe the ccw wedge from a to b at its middle.
    double sweep = wrap(ahi - alo);
    if (sweep < 0) sweep += 2 * kPi;
    const double mid = alo + 0.5 * sweep;
    const Point2 mdir(std::cos(mid + theta_in), std::sin(mid + theta_in));
    const double probe = 1e-6 * std::min(a.norm(), b.norm());
    if (!strictly_inside(poly, at + probe * mdir)) {
      std::swap(alo, ahi);
      sweep = 2 * kPi - sweep;
    }
    lo = alo;
    hi = alo + sweep;
  }

  // Forward half-plane [-pi/2, pi/2] minus the wedge; wedge angles are taken
  // in (-pi, pi], possibly extended past pi.
  std::vector<std::pair<double, double>> pieces{{-kPi / 2, kPi / 2}};
  for (double shift : {-2 * kPi, 0.0, 2 * kPi}) {
    const double wlo = lo + shift, whi = hi + shift;
    std::vector<std::pair<double, double>> next;
    for (const auto& p : pieces) {
      if (whi <= p.first || wlo >= p.second) {
        next.push_back(p);
        continue;
      }
      if (wlo > p.first) next.push_back({p.first, wlo});
      if (whi < p.second) next.push_back({whi, p.second});
    }
    pieces = std::move(next);
  }
  AngularSector best;
  for (const auto& p : pieces)
    if (p.second - p.first > best.width) best = {wrap(p.first + theta_in), p.second - p.first};
  return best;
}

std::vector<Point2> corner_fan(const PolygonalWorld& world, const GeodesicPath& path, int count) {
  std::vector<Point2> out;
  if (count < 1 || path.corners.empty()) return out;
  const AngularSector s = free_sector(world, path);
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    const double a = s.start + f * s.width;
    out.emplace_back(std::cos(a), std::sin(a));
  }
  return out;
}

std::vector<PathRow> path_table(const std::vector<GeodesicPath>& paths, double speed) {
  if (!(speed > 0.0)) throw Error(ErrorKind::InvalidArgument, "speed must be positive");
  std::vector<PathRow> rows;
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& p : paths) shortest = std::min(shortest, p.length);
  for (const auto& p : paths) {
    PathRow r;
    r.length = p.length;
    r.travel_time = p.length / speed;
    r.action = 0.5 * speed * p.length;
    r.action_difference = 0.5 * speed * (p.length - shortest);
    r.travel_time_difference = (p.length - shortest) / speed;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace contraq
