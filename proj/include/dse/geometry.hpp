#pragma once

#include "dse/types.hpp"

#include <span>
#include <vector>

namespace dse {

/// Closed-intersection tolerance for all geometry predicates (meters).
inline constexpr double kGeomEps = 1e-9;

struct Segment {
  Vec2 a;
  Vec2 b;
};

/// Axis-aligned workspace rectangle plus the vertical extent targets live in.
struct Bounds {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 10.0;
  double ymax = 10.0;
  double zmin = 0.0;
  double zmax = 5.0;

  bool contains(const Vec2& p, double eps = kGeomEps) const {
    return p.x() >= xmin - eps && p.x() <= xmax + eps && p.y() >= ymin - eps && p.y() <= ymax + eps;
  }
  double diameter() const;
};

struct Workspace {
  Bounds bounds;
  std::vector<Segment> obstacles;
  double comm_range = 0.2;
  double sense_range = 5.0;

  /// Throws Error if the communication range is not small relative to the domain.
  void validate() const;
  /// In bounds and not on any obstacle segment.
  bool is_free(const Vec2& p) const;
};

struct Polyline {
  std::vector<Vec2> points;
  double length() const;
};

class NoPath : public Error {
 public:
  using Error::Error;
};

/// Closed segment intersection test with tolerance kGeomEps; touching counts.
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

double point_segment_distance(const Vec2& p, const Segment& s);

/// True iff the planar segment from `p` to the target's ground projection
/// meets no obstacle. Walls are full height, so occlusion is 2D.
bool line_of_sight(const Vec2& p, const Vec3& target, std::span<const Segment> obstacles);

/// True iff segment a-b stays in bounds and meets no obstacle.
bool collision_free(const Vec2& a, const Vec2& b, const Workspace& ws);

/// Shortest obstacle-avoiding polyline from a to b over a visibility graph
/// whose extra vertices sit a small clearance beyond each obstacle endpoint.
/// Throws NoPath if b is unreachable.
Polyline geodesic(const Vec2& a, const Vec2& b, const Workspace& ws, double clearance = 0.05);

/// Position after travelling `distance` along the polyline (clamped to its ends).
Vec2 point_along(const Polyline& path, double distance);

}  // namespace dse
