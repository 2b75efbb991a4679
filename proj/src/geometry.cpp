#include "dse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace dse {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Vec2& p, const Vec2& q, const Vec2& r) { return cross(q - p, r - p); }

double segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return 0.0;
  return std::min({point_segment_distance(p1, {q1, q2}), point_segment_distance(p2, {q1, q2}),
                   point_segment_distance(q1, {p1, p2}), point_segment_distance(q2, {p1, p2})});
}

}  // namespace

double Bounds::diameter() const { return std::hypot(xmax - xmin, ymax - ymin); }

void Workspace::validate() const {
  if (!(bounds.xmax > bounds.xmin && bounds.ymax > bounds.ymin && bounds.zmax >= bounds.zmin))
    throw Error("workspace bounds are empty");
  if (!(comm_range > 0.0)) throw Error("communication range must be positive");
  if (!(comm_range < bounds.diameter())) throw Error("communication range must be smaller than the workspace diameter");
  if (!(sense_range > 0.0)) throw Error("sensing range must be positive");
}

bool Workspace::is_free(const Vec2& p) const {
  if (!bounds.contains(p)) return false;
  return std::none_of(obstacles.begin(), obstacles.end(),
                      [&](const Segment& s) { return point_segment_distance(p, s) <= kGeomEps; });
}

double Polyline::length() const {
  double len = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) len += (points[k] - points[k - 1]).norm();
  return len;
}

double point_segment_distance(const Vec2& p, const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - s.a).norm();
  const double u = std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0);
  return (p - (s.a + u * d)).norm();
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  return segment_distance(p1, p2, q1, q2) <= kGeomEps;
}

bool line_of_sight(const Vec2& p, const Vec3& target, std::span<const Segment> obstacles) {
  const Vec2 ground = target.head<2>();
  return std::none_of(obstacles.begin(), obstacles.end(),
                      [&](const Segment& s) { return segments_intersect(p, ground, s.a, s.b); });
}

bool collision_free(const Vec2& a, const Vec2& b, const Workspace& ws) {
  if (!ws.bounds.contains(a) || !ws.bounds.contains(b)) return false;
  return std::none_of(ws.obstacles.begin(), ws.obstacles.end(),
                      [&](const Segment& s) { return segments_intersect(a, b, s.a, s.b); });
}

Polyline geodesic(const Vec2& a, const Vec2& b, const Workspace& ws, double clearance) {
  if (!ws.is_free(a) || !ws.is_free(b)) throw NoPath("geodesic endpoints must lie in free space");
  if (collision_free(a, b, ws)) return Polyline{{a, b}};

  std::vector<Vec2> nodes{a, b};
  for (const Segment& s : ws.obstacles) {
    const Vec2 dir = s.b - s.a;
    if (dir.norm() == 0.0) continue;
    const Vec2 u = dir.normalized();
    const Vec2 n(-u.y(), u.x());
    for (const auto& [end, out] : {std::pair{s.b, u}, std::pair{s.a, Vec2(-u)}}) {
      for (const Vec2& offset : {Vec2(out), Vec2((out + n).normalized()), Vec2((out - n).normalized())}) {
        const Vec2 c = end + clearance * offset;
        if (ws.is_free(c)) nodes.push_back(c);
      }
    }
  }

  const std::size_t count = nodes.size();
  std::vector<double> dist(count, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> prev(count, count);
  std::vector<bool> done(count, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[0] = 0.0;
  queue.emplace(0.0, 0);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == 1) break;
    for (std::size_t v = 0; v < count; ++v) {
      if (done[v] || v == u) continue;
      const double w = (nodes[v] - nodes[u]).norm();
      if (d + w >= dist[v]) continue;
      if (!collision_free(nodes[u], nodes[v], ws)) continue;
      dist[v] = d + w;
      prev[v] = u;
      queue.emplace(dist[v], v);
    }
  }
  if (!done[1]) throw NoPath("no obstacle-free path between the requested points");

  Polyline path;
  for (std::size_t v = 1; v != count; v = prev[v]) path.points.push_back(nodes[v]);
  std::reverse(path.points.begin(), path.points.end());
  return path;
}

Vec2 point_along(const Polyline& path, double distance) {
  if (path.points.empty()) throw Error("empty polyline");
  double remaining = std::max(0.0, distance);
  for (std::size_t k = 1; k < path.points.size(); ++k) {
    const Vec2 seg = path.points[k] - path.points[k - 1];
    const double len = seg.norm();
    if (remaining <= len) return len == 0.0 ? path.points[k] : Vec2(path.points[k - 1] + seg * (remaining / len));
    remaining -= len;
  }
  return path.points.back();
}

}  // namespace dse
