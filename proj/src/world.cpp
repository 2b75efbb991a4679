#include "dse/world.hpp"

#include <algorithm>
#include <cmath>

namespace dse {

namespace {

double reflect(double c, double lo, double hi) {
  if (c < lo) c = 2.0 * lo - c;
  if (c > hi) c = 2.0 * hi - c;
  return std::clamp(c, lo, hi);
}

bool crosses_obstacle(const Vec3& from, const Vec3& to, const Workspace& ws) {
  const Vec2 a = from.head<2>();
  const Vec2 b = to.head<2>();
  return std::any_of(ws.obstacles.begin(), ws.obstacles.end(),
                     [&](const Segment& s) { return segments_intersect(a, b, s.a, s.b); });
}

}  // namespace

Vec3 sample_gaussian(const Eigen::Matrix3d& cov, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 z;
  for (int i = 0; i < 3; ++i) z(i) = normal(rng);
  if (cov.isDiagonal(0.0)) return cov.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseProduct(z);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Vec3 scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * scale.cwiseProduct(z);
}

Vec2 sample_free_point(const Workspace& ws, Rng& rng) {
  std::uniform_real_distribution<double> ux(ws.bounds.xmin, ws.bounds.xmax);
  std::uniform_real_distribution<double> uy(ws.bounds.ymin, ws.bounds.ymax);
  for (;;) {
    const Vec2 p(ux(rng), uy(rng));
    if (ws.is_free(p)) return p;
  }
}

WorldState step_targets(const WorldState& state, std::span<const TargetModel> models, const Workspace& ws, Rng& rng) {
  if (models.size() != state.targets.size()) throw Error("one target model per target is required");
  WorldState next = state;
  next.t = state.t + 1;
  const Bounds& bb = ws.bounds;
  for (std::size_t a = 0; a < state.targets.size(); ++a) {
    const TargetModel& m = models[a];
    const Vec3& x = state.targets[a];
    const Vec3 drift = m.A * x + m.B * m.input_at(state.t);
    Vec3 result = x;
    for (int attempt = 0; attempt < 100; ++attempt) {
      Vec3 cand = drift + sample_gaussian(m.Q, rng);
      cand = Vec3(reflect(cand.x(), bb.xmin, bb.xmax), reflect(cand.y(), bb.ymin, bb.ymax),
                  reflect(cand.z(), bb.zmin, bb.zmax));
      if (!crosses_obstacle(x, cand, ws)) {
        result = cand;
        break;
      }
    }
    next.targets[a] = result;
  }
  return next;
}

std::vector<MeasurementRecord> sense(const WorldState& state, RobotId robot, const SensorModel& sensor,
                                     const Workspace& ws, Rng& rng, double noise_scale) {
  const auto it = state.robots.find(robot);
  if (it == state.robots.end()) throw Error("sense: robot has no position");
  const Vec2 q = it->second;
  const double reach = std::min(sensor.max_range, ws.sense_range);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MeasurementRecord> out;
  for (std::size_t a = 0; a < state.targets.size(); ++a) {
    const double range = range_to(q, state.targets[a]);
    const double z = normal(rng);
    if (range > reach || !line_of_sight(q, state.targets[a], ws.obstacles)) continue;
    out.push_back({robot, state.t, q, a, range + noise_scale * sensor.sigma(range) * z});
  }
  return out;
}

}  // namespace dse
