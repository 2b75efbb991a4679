#include "dse/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dse {

namespace {

using Eigen::Index;
using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

bool is_block_diagonal(const MatrixXd& cov) {
  const Index n = cov.rows();
  for (Index j = 0; j < n; ++j) {
    const Index block = j / 3;
    for (Index i = 0; i < n; ++i)
      if (i / 3 != block && cov(i, j) != 0.0) return false;
  }
  return true;
}

bool all_identity(std::span<const TargetModel> models) {
  return std::all_of(models.begin(), models.end(),
                     [](const TargetModel& m) { return m.A.isIdentity(0.0) && m.B.isIdentity(0.0); });
}

void predict_step(Belief& b, std::span<const TargetModel> models, bool identity, bool block_diag) {
  const std::size_t count = b.target_count();
  for (std::size_t a = 0; a < count; ++a) {
    const TargetModel& m = models[a];
    const Index k = 3 * static_cast<Index>(a);
    b.xhat.segment<3>(k) = m.A * b.xhat.segment<3>(k) + m.B * m.input_at(b.t);
  }
  if (identity) {
    for (std::size_t a = 0; a < count; ++a) {
      const Index k = 3 * static_cast<Index>(a);
      b.cov.block<3, 3>(k, k) += models[a].Q;
    }
  } else if (block_diag) {
    for (std::size_t a = 0; a < count; ++a) {
      const Index k = 3 * static_cast<Index>(a);
      const Matrix3d c = b.cov.block<3, 3>(k, k);
      b.cov.block<3, 3>(k, k) = models[a].A * c * models[a].A.transpose() + models[a].Q;
    }
  } else {
    MatrixXd F = MatrixXd::Zero(b.cov.rows(), b.cov.cols());
    MatrixXd Q = MatrixXd::Zero(b.cov.rows(), b.cov.cols());
    for (std::size_t a = 0; a < count; ++a) {
      const Index k = 3 * static_cast<Index>(a);
      F.block<3, 3>(k, k) = models[a].A;
      Q.block<3, 3>(k, k) = models[a].Q;
    }
    b.cov = F * b.cov * F.transpose() + Q;
  }
  ++b.t;
}

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

struct Row {
  Vec3 gradient;
  double innovation;
  double variance;
};

// Linearized range row for one record at the current estimate; false if the
// predicted range is too small for a well-defined gradient.
bool linearize(const Belief& b, const MeasurementRecord& r, const SensorModel& sensor, UpdateMode mode, Row& row) {
  const Vec3 x = b.position(r.target);
  const Vec3 p(r.q.x(), r.q.y(), 0.0);
  const Vec3 diff = x - p;
  const double range = diff.norm();
  if (range < 1e-6) return false;
  row.gradient = diff / range;
  row.innovation = mode == UpdateMode::Measured ? r.y - range : 0.0;
  const double s = sensor.sigma(std::min(range, sensor.max_range));
  row.variance = s * s;
  return true;
}

}  // namespace

Belief Belief::make(TimeStep t, std::span<const Vec3> positions, double variance) {
  Belief b;
  b.t = t;
  const Index n = 3 * static_cast<Index>(positions.size());
  b.xhat.resize(n);
  for (std::size_t a = 0; a < positions.size(); ++a) b.xhat.segment<3>(3 * static_cast<Index>(a)) = positions[a];
  b.cov = variance * MatrixXd::Identity(n, n);
  return b;
}

void Belief::validate() const {
  if (!xhat.allFinite()) throw Error("belief estimate is not finite");
  if (cov.rows() != xhat.size() || cov.cols() != xhat.size()) throw Error("belief covariance has the wrong shape");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw Error("belief covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw Error("belief covariance is not positive definite");
}

Vec3 TargetModel::nominal(TimeStep t) const {
  return std::visit(
      [&](const auto& in) -> Vec3 {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, StationaryInput>) {
          return origin;
        } else if constexpr (std::is_same_v<T, CircularInput>) {
          const double w = 2.0 * std::numbers::pi / static_cast<double>(in.period);
          const Vec3 center = origin - in.radius * Vec3(std::cos(in.phase), std::sin(in.phase), 0.0);
          const double angle = in.phase + w * static_cast<double>(t);
          return center + in.radius * Vec3(std::cos(angle), std::sin(angle), 0.0);
        } else {
          std::vector<Vec3> pts{origin};
          pts.insert(pts.end(), in.waypoints.begin(), in.waypoints.end());
          double total = 0.0;
          for (std::size_t k = 1; k < pts.size(); ++k) total += (pts[k] - pts[k - 1]).norm();
          if (total == 0.0) return origin;
          double s = std::fmod(in.speed * static_cast<double>(t), 2.0 * total);
          if (s > total) s = 2.0 * total - s;
          for (std::size_t k = 1; k < pts.size(); ++k) {
            const double len = (pts[k] - pts[k - 1]).norm();
            if (s <= len && len > 0.0) return pts[k - 1] + (pts[k] - pts[k - 1]) * (s / len);
            s -= len;
          }
          return pts.back();
        }
      },
      input);
}

void TargetModel::validate() const {
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw Error("process noise covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw Error("process noise covariance is not positive definite");
  if (const auto* c = std::get_if<CircularInput>(&input); c && (c->period < 1 || c->radius < 0.0))
    throw Error("circular input needs a positive period and non-negative radius");
  if (const auto* w = std::get_if<WaypointInput>(&input); w && w->speed < 0.0)
    throw Error("waypoint input speed must be non-negative");
}

double SensorModel::sigma(double range) const {
  if (range < 0.0) throw Error("negative range");
  if (range > max_range) throw OutOfSensingRange("range " + std::to_string(range) + " m exceeds the sensing range");
  if (range <= near_break) return sigma_near;
  if (range <= far_break) return slope * range + intercept;
  return sigma_far;
}

double range_to(const Vec2& q, const Vec3& target) { return (target - Vec3(q.x(), q.y(), 0.0)).norm(); }

Belief predict(const Belief& belief, std::span<const TargetModel> models, TimeStep to_time) {
  if (to_time < belief.t) throw Error("cannot predict backwards in time");
  if (models.size() != belief.target_count()) throw Error("one target model per target is required");
  Belief b = belief;
  if (to_time == b.t) return b;
  const bool identity = all_identity(models);
  const bool block_diag = identity || is_block_diagonal(b.cov);
  while (b.t < to_time) predict_step(b, models, identity, block_diag);
  return b;
}

Belief kalman_update(const Belief& belief, const MatrixXd& H, const VectorXd& innovation, const MatrixXd& R) {
  const MatrixXd HC = H * belief.cov;
  MatrixXd S = HC * H.transpose() + R;
  symmetrize(S);
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw SingularInnovation("innovation covariance is not invertible");
  const MatrixXd K = llt.solve(HC).transpose();
  Belief out = belief;
  out.xhat += K * innovation;
  out.cov -= K * HC;
  symmetrize(out.cov);
  return out;
}

Belief update(const Belief& belief, std::span<const MeasurementRecord> batch, const SensorModel& sensor,
              UpdateMode mode) {
  if (batch.empty()) return belief;
  for (const auto& r : batch) {
    if (r.t != belief.t) throw Error("update batch must be taken at the belief time");
    if (r.target >= belief.target_count()) throw Error("record refers to an unknown target");
  }

  if (is_block_diagonal(belief.cov)) {
    // Range rows touch a single target, so with a block-diagonal covariance
    // the stacked update separates exactly into per-target corrections.
    Belief out = belief;
    std::vector<Row> rows;
    for (std::size_t a = 0; a < belief.target_count(); ++a) {
      rows.clear();
      for (const auto& r : batch) {
        Row row;
        if (r.target == a && linearize(belief, r, sensor, mode, row)) rows.push_back(row);
      }
      if (rows.empty()) continue;
      const Index m = static_cast<Index>(rows.size());
      const Index k = 3 * static_cast<Index>(a);
      Eigen::Matrix<double, Eigen::Dynamic, 3> H(m, 3);
      VectorXd nu(m);
      MatrixXd S = MatrixXd::Zero(m, m);
      for (Index i = 0; i < m; ++i) {
        H.row(i) = rows[static_cast<std::size_t>(i)].gradient.transpose();
        nu(i) = rows[static_cast<std::size_t>(i)].innovation;
        S(i, i) = rows[static_cast<std::size_t>(i)].variance;
      }
      const Matrix3d C = out.cov.block<3, 3>(k, k);
      const Eigen::Matrix<double, Eigen::Dynamic, 3> HC = H * C;
      S += HC * H.transpose();
      symmetrize(S);
      Eigen::LLT<MatrixXd> llt(S);
      if (llt.info() != Eigen::Success) throw SingularInnovation("innovation covariance is not invertible");
      const Eigen::Matrix<double, 3, Eigen::Dynamic> K = llt.solve(MatrixXd(HC)).transpose();
      out.xhat.segment<3>(k) += K * nu;
      Matrix3d Cn = C - K * HC;
      Cn = 0.5 * (Cn + Cn.transpose()).eval();
      out.cov.block<3, 3>(k, k) = Cn;
    }
    return out;
  }

  std::vector<Row> rows;
  std::vector<std::size_t> targets;
  for (const auto& r : batch) {
    Row row;
    if (linearize(belief, r, sensor, mode, row)) {
      rows.push_back(row);
      targets.push_back(r.target);
    }
  }
  if (rows.empty()) return belief;
  const Index m = static_cast<Index>(rows.size());
  MatrixXd H = MatrixXd::Zero(m, belief.xhat.size());
  VectorXd nu(m);
  MatrixXd R = MatrixXd::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    H.block<1, 3>(i, 3 * static_cast<Index>(targets[static_cast<std::size_t>(i)])) = row.gradient.transpose();
    nu(i) = row.innovation;
    R(i, i) = row.variance;
  }
  return kalman_update(belief, H, nu, R);
}

double block_uncertainty(const Belief& belief, std::size_t target) {
  // The closed-form 3x3 solver loses ~1e-10 on repeated eigenvalues, which
  // isotropic covariances always have; the iterative one does not.
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(belief.block(target), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double uncertainty(const Belief& belief) {
  if (belief.cov.size() == 0) return 0.0;
  if (belief.cov.rows() % 3 == 0 && is_block_diagonal(belief.cov)) {
    double worst = 0.0;
    for (std::size_t a = 0; a < belief.target_count(); ++a) worst = std::max(worst, block_uncertainty(belief, a));
    return worst;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(belief.cov, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

Belief filter_forward(const Belief& start, TimeStep until, std::span<const MeasurementRecord> records,
                      std::span<const TargetModel> models, const SensorModel& sensor) {
  if (until < start.t) throw Error("cannot filter backwards in time");
  Belief b = start;
  const bool identity = all_identity(models);
  const bool block_diag = identity || is_block_diagonal(b.cov);
  auto it = std::lower_bound(records.begin(), records.end(), start.t + 1,
                             [](const MeasurementRecord& r, TimeStep t) { return r.t < t; });
  while (b.t < until) {
    predict_step(b, models, identity, block_diag);
    const auto first = it;
    while (it != records.end() && it->t == b.t) ++it;
    if (first != it) {
      try {
        b = update(b, std::span<const MeasurementRecord>(&*first, static_cast<std::size_t>(it - first)), sensor);
      } catch (const SingularInnovation&) {
        // degenerate geometry: the batch carries no usable information
      }
    }
  }
  return b;
}

CostIncrement path_cost(const Belief& start, TimeStep until, const SensingScene& scene, const SensorPoseFn& poses) {
  CostIncrement out{0.0, start};
  if (until <= start.t) return out;
  Belief& b = out.belief;
  const bool identity = all_identity(scene.models);
  const bool block_diag = identity || is_block_diagonal(b.cov);
  std::vector<Vec2> sensors;
  std::vector<MeasurementRecord> batch;
  while (b.t < until) {
    predict_step(b, scene.models, identity, block_diag);
    if (scene.measure_period > 0 && b.t % scene.measure_period == 0) {
      sensors.clear();
      poses(b.t, sensors);
      batch.clear();
      for (const Vec2& q : sensors) {
        for (std::size_t a = 0; a < b.target_count(); ++a) {
          const Vec3 x = b.position(a);
          if (range_to(q, x) > scene.sensor.max_range) continue;
          if (!line_of_sight(q, x, scene.obstacles)) continue;
          batch.push_back({RobotId{0}, b.t, q, a, 0.0});
        }
      }
      if (!batch.empty()) {
        try {
          b = update(b, batch, scene.sensor, UpdateMode::PredictedOnly);
        } catch (const SingularInnovation&) {
        }
      }
    }
    out.cost += uncertainty(b);
  }
  return out;
}

}  // namespace dse
