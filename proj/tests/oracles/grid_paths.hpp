// Grid-graph shortest path length among polygonal obstacles.
//
// Nodes sit on a square lattice; any node closer than half a cell to an
// obstacle is blocked. Moves are all primitive lattice vectors up to `reach`
// cells in each axis, which keeps the metrication error below 1% for
// reach >= 4 (an 8-neighbour stencil alone overestimates shallow diagonals by
// several percent).
#ifndef CONTRAQ_TESTS_GRID_PATHS_HPP_
#define CONTRAQ_TESTS_GRID_PATHS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Dense>

namespace contraq::oracle {

struct GridShape {
  std::vector<Eigen::Vector2d> pts;  // 2 points = segment, more = closed polygon
};

class GridPaths {
 public:
  GridPaths(std::vector<GridShape> shapes, double lo, double hi, int cells = 400, int reach = 4)
      : shapes_(std::move(shapes)), lo_(lo), h_((hi - lo) / cells), n_(cells + 1) {
    for (int dx = -reach; dx <= reach; ++dx)
      for (int dy = -reach; dy <= reach; ++dy)
        if ((dx || dy) && std::gcd(std::abs(dx), std::abs(dy)) == 1) moves_.push_back({dx, dy});
    clearance_.resize(static_cast<size_t>(n_) * static_cast<size_t>(n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) clearance_[idx(i, j)] = clearance(point(i, j));
  }

  double cell() const { return h_; }

  // Shortest lattice length between the nodes nearest to a and b; +inf when
  // disconnected.
  double shortest(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    const int ai = snap(a.x()), aj = snap(a.y()), bi = snap(b.x()), bj = snap(b.y());
    const size_t total = clearance_.size();
    std::vector<double> dist(total, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    const size_t start = idx(ai, aj), goal = idx(bi, bj);
    if (blocked(start) || blocked(goal)) return std::numeric_limits<double>::infinity();
    dist[start] = 0.0;
    pq.push({0.0, start});
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      if (u == goal) return d;
      const int ui = static_cast<int>(u / static_cast<size_t>(n_));
      const int uj = static_cast<int>(u % static_cast<size_t>(n_));
      for (const auto& [dx, dy] : moves_) {
        const int vi = ui + dx, vj = uj + dy;
        if (vi < 0 || vj < 0 || vi >= n_ || vj >= n_) continue;
        const size_t v = idx(vi, vj);
        if (blocked(v)) continue;
        const double len = h_ * std::hypot(dx, dy);
        if (!move_clear(ui, uj, vi, vj, len)) continue;
        if (d + len < dist[v]) {
          dist[v] = d + len;
          pq.push({dist[v], v});
        }
      }
    }
    return std::numeric_limits<double>::infinity();
  }

 private:
  size_t idx(int i, int j) const { return static_cast<size_t>(i) * static_cast<size_t>(n_) + static_cast<size_t>(j); }
  Eigen::Vector2d point(int i, int j) const { return {lo_ + i * h_, lo_ + j * h_}; }
  int snap(double c) const { return static_cast<int>(std::lround((c - lo_) / h_)); }
  bool blocked(size_t k) const { return clearance_[k] < 0.5 * h_; }

  static double seg_dist(const Eigen::Vector2d& x, const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
    const Eigen::Vector2d d = q - p;
    double s = d.squaredNorm() > 0 ? (x - p).dot(d) / d.squaredNorm() : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (x - p - s * d).norm();
  }

  static bool inside(const GridShape& s, const Eigen::Vector2d& x) {
    const auto& v = s.pts;
    bool in = false;
    for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
      if ((v[i].y() > x.y()) != (v[j].y() > x.y()) &&
          x.x() < v[j].x() + (x.y() - v[j].y()) * (v[i].x() - v[j].x()) / (v[i].y() - v[j].y()))
        in = !in;
    return in;
  }

  // Distance to the nearest obstacle, zero inside a polygon.
  double clearance(const Eigen::Vector2d& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : shapes_) {
      const size_t m = s.pts.size();
      if (m >= 3 && inside(s, x)) return 0.0;
      const size_t edges = m == 2 ? 1 : m;
      for (size_t e = 0; e < edges; ++e) best = std::min(best, seg_dist(x, s.pts[e], s.pts[(e + 1) % m]));
    }
    return best;
  }

  bool move_clear(int ui, int uj, int vi, int vj, double len) const {
    if (clearance_[idx(ui, uj)] > len + h_) return true;
    const Eigen::Vector2d a = point(ui, uj), b = point(vi, vj);
    const int samples = static_cast<int>(std::ceil(len / (0.125 * h_)));
    for (int s = 1; s < samples; ++s)
      if (clearance(a + (b - a) * (static_cast<double>(s) / samples)) < 0.5 * h_) return false;
    return true;
  }

  std::vector<GridShape> shapes_;
  double lo_, h_;
  int n_;
  std::vector<std::pair<int, int>> moves_;
  std::vector<double> clearance_;
};

}  // namespace contraq::oracle

#endif  // CONTRAQ_TESTS_GRID_PATHS_HPP_
