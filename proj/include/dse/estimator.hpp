#pragma once

#include "dse/geometry.hpp"
#include "dse/types.hpp"

#include <compare>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace dse {

/// Stacked target estimate: three coordinates per target, covariance in m^2.
struct Belief {
  TimeStep t = 0;
  Eigen::VectorXd xhat;
  Eigen::MatrixXd cov;

  static Belief make(TimeStep t, std::span<const Vec3> positions, double variance);

  std::size_t target_count() const { return static_cast<std::size_t>(xhat.size() / 3); }
  Vec3 position(std::size_t target) const { return xhat.segment<3>(3 * static_cast<Eigen::Index>(target)); }
  Eigen::Matrix3d block(std::size_t target) const {
    const auto k = 3 * static_cast<Eigen::Index>(target);
    return cov.block<3, 3>(k, k);
  }
  /// Throws Error unless xhat is finite and cov is symmetric (1e-10) with positive eigenvalues.
  void validate() const;
};

// Input profiles realize nominal target paths; u(t) is the nominal increment
// from t to t + 1, so a noise-free identity-dynamics target follows the path
// exactly.

struct StationaryInput {};

/// Constant-speed travel along origin -> waypoints..., reversing at either end.
struct WaypointInput {
  std::vector<Vec3> waypoints;
  double speed = 0.01;  // m per step
};

/// Planar circle through the origin; one revolution every `period` steps.
struct CircularInput {
  double radius = 0.5;
  long period = 200;
  double phase = 0.0;  // angle of the origin as seen from the circle center
};

using InputProfile = std::variant<StationaryInput, WaypointInput, CircularInput>;

/// Linear time-invariant target x(t+1) = A x(t) + B u(t) + w(t), w ~ N(0, Q).
struct TargetModel {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d Q = 1e-4 * Eigen::Matrix3d::Identity();
  InputProfile input = StationaryInput{};
  Vec3 origin = Vec3::Zero();  // initial true position; anchors the nominal path

  Vec3 nominal(TimeStep t) const;
  Vec3 input_at(TimeStep t) const { return nominal(t + 1) - nominal(t); }
  /// Throws Error unless Q is symmetric positive definite.
  void validate() const;
};

class OutOfSensingRange : public Error {
 public:
  using Error::Error;
};

class SingularInnovation : public Error {
 public:
  using Error::Error;
};

/// Range-only sensor noise: flat near, linear ramp, flat far, zero beyond max range.
struct SensorModel {
  double max_range = 5.0;
  double sigma_near = 0.01;
  double slope = 0.045;
  double intercept = -0.035;
  double sigma_far = 0.1;
  double near_break = 1.0;
  double far_break = 3.0;

  /// Standard deviation at range `range`; throws OutOfSensingRange beyond max_range.
  double sigma(double range) const;
};

struct RecordKey {
  TimeStep t = 0;
  RobotId robot{};
  std::size_t target = 0;

  auto operator<=>(const RecordKey&) const = default;
};

/// Range reading y taken by `robot` at position q and time t.
struct MeasurementRecord {
  RobotId robot{};
  TimeStep t = 0;
  Vec2 q = Vec2::Zero();
  std::size_t target = 0;
  double y = 0.0;

  RecordKey key() const { return {t, robot, target}; }
};

/// Robots move on the ground plane; a target at height z is seen from height 0.
double range_to(const Vec2& q, const Vec3& target);

enum class UpdateMode {
  Measured,       // use the recorded ranges
  PredictedOnly,  // planning: zero innovation, covariance only
};

/// Propagates the belief step by step up to `to_time`.
Belief predict(const Belief& belief, std::span<const TargetModel> models, TimeStep to_time);

/// Stacked EKF update with every record taken at belief.t. Rows whose
/// predicted range is below 1e-6 m are skipped. Throws SingularInnovation.
Belief update(const Belief& belief, std::span<const MeasurementRecord> batch, const SensorModel& sensor,
              UpdateMode mode = UpdateMode::Measured);

/// Generic Kalman correction with measurement Jacobian H, innovation and noise R.
Belief kalman_update(const Belief& belief, const Eigen::MatrixXd& H, const Eigen::VectorXd& innovation,
                     const Eigen::MatrixXd& R);

/// Largest eigenvalue of the covariance.
double uncertainty(const Belief& belief);
/// Largest eigenvalue of one target's 3x3 covariance block.
double block_uncertainty(const Belief& belief, std::size_t target);

/// Runs predict/update from belief.t to `until`, fusing the records whose
/// time lies in (belief.t, until]. `records` must be sorted by key.
Belief filter_forward(const Belief& start, TimeStep until, std::span<const MeasurementRecord> records,
                      std::span<const TargetModel> models, const SensorModel& sensor);

/// Everything cost accumulation needs to know about the world.
struct SensingScene {
  std::span<const TargetModel> models;
  SensorModel sensor;
  std::span<const Segment> obstacles;
  TimeStep measure_period = 1;
};

/// Fills `out` with the sensor positions active at time t.
using SensorPoseFn = std::function<void(TimeStep t, std::vector<Vec2>& out)>;

struct CostIncrement {
  double cost = 0.0;
  Belief belief;
};

/// Predicted-only accumulation of the uncertainty metric over (start.t, until].
/// Predicted ranges and sight lines to predicted target positions decide which
/// virtual measurements are fused at each measurement instant.
CostIncrement path_cost(const Belief& start, TimeStep until, const SensingScene& scene, const SensorPoseFn& poses);

}  // namespace dse
