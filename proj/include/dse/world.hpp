#pragma once

#include "dse/estimator.hpp"
#include "dse/geometry.hpp"
#include "dse/rng.hpp"

#include <map>
#include <span>
#include <vector>

namespace dse {

/// Ground truth at one instant.
struct WorldState {
  TimeStep t = 0;
  std::vector<Vec3> targets;
  std::map<RobotId, Vec2> robots;
};

/// Advances every target one step with sampled process noise. Positions are
/// reflected back into the workspace box, and a noise draw that would carry a
/// target across an obstacle is redrawn (after 100 failed draws the target
/// keeps its position).
WorldState step_targets(const WorldState& state, std::span<const TargetModel> models, const Workspace& ws, Rng& rng);

/// One range record per target within sensing range and in line of sight.
/// `noise_scale` multiplies the sampled noise (0 gives exact ranges).
std::vector<MeasurementRecord> sense(const WorldState& state, RobotId robot, const SensorModel& sensor,
                                     const Workspace& ws, Rng& rng, double noise_scale = 1.0);

/// Draws a zero-mean Gaussian vector with covariance `cov` (positive semidefinite).
Vec3 sample_gaussian(const Eigen::Matrix3d& cov, Rng& rng);

/// Uniform point in the obstacle-free workspace.
Vec2 sample_free_point(const Workspace& ws, Rng& rng);

}  // namespace dse
