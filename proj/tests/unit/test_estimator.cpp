#include "doctest.h"

#include "dse/estimator.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace dse;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Belief belief_at(std::vector<Vec3> pos, double var, TimeStep t = 0) { return Belief::make(t, pos, var); }

double power_iteration(const MatrixXd& m) {
  VectorXd v = VectorXd::Ones(m.rows());
  double lambda = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const VectorXd w = m * v;
    const double next = w.norm() / v.norm();
    v = w.normalized();
    if (std::abs(next - lambda) < 1e-15 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace

TEST_CASE("sensor noise profile") {
  const SensorModel m;
  CHECK(m.sigma(0.5) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(m.sigma(2.0) == doctest::Approx(0.055).epsilon(1e-12));
  CHECK(m.sigma(4.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(m.sigma(0.0) == doctest::Approx(0.01));
  CHECK(m.sigma(5.0) == doctest::Approx(0.1));
  CHECK(std::abs(m.sigma(1.0 + 1e-12) - m.sigma(1.0)) < 1e-12);
  CHECK(std::abs(m.sigma(3.0 - 1e-12) - m.sigma(3.0)) < 1e-12);
  CHECK_THROWS_AS(m.sigma(5.01), OutOfSensingRange);
}

TEST_CASE("predict") {
  std::vector<TargetModel> models(1);
  models[0].Q = Eigen::Matrix3d::Zero();
  const Belief b = belief_at({Vec3(1, 2, 3)}, 0.25);

  SUBCASE("identity dynamics without noise leave the belief unchanged") {
    const Belief p = predict(b, models, 1);
    CHECK(p.t == 1);
    CHECK((p.xhat - b.xhat).norm() == 0.0);
    CHECK((p.cov - b.cov).norm() == 0.0);
  }
  SUBCASE("process noise adds q I per step") {
    models[0].Q = 0.01 * Eigen::Matrix3d::Identity();
    const Belief p = predict(b, models, 1);
    CHECK((p.cov - (b.cov + 0.01 * MatrixXd::Identity(3, 3))).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("empty interval") {
    const Belief p = predict(b, models, 0);
    CHECK((p.cov - b.cov).norm() == 0.0);
  }
  SUBCASE("general linear dynamics follow F C F^T + Q") {
    models[0].A << 1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.9;
    models[0].Q = 0.002 * Eigen::Matrix3d::Identity();
    const Belief p = predict(b, models, 2);
    const Eigen::Matrix3d F = models[0].A;
    Eigen::Matrix3d C = b.cov;
    Vec3 x = b.xhat;
    for (int k = 0; k < 2; ++k) {
      x = F * x + models[0].B * models[0].input_at(k);
      C = F * C * F.transpose() + models[0].Q;
    }
    CHECK((p.xhat - x).norm() < 1e-12);
    CHECK((p.cov - C).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("scalar Kalman algebra") {
  Belief b;
  b.xhat = VectorXd::Zero(1);
  b.cov = MatrixXd::Ones(1, 1);
  const Belief post = kalman_update(b, MatrixXd::Ones(1, 1), VectorXd::Ones(1), MatrixXd::Ones(1, 1));
  CHECK(post.cov(0, 0) == doctest::Approx(0.5));
  CHECK(post.xhat(0) == doctest::Approx(0.5));
}

TEST_CASE("empty batch leaves the belief unchanged") {
  const Belief b = belief_at({Vec3(1, 1, 1)}, 0.25);
  const Belief u = update(b, {}, SensorModel{});
  CHECK((u.cov - b.cov).norm() == 0.0);
  CHECK((u.xhat - b.xhat).norm() == 0.0);
}

TEST_CASE("concurrent range measurements equal sequential scalar updates") {
  const SensorModel sensor;
  Belief b = belief_at({Vec3(2, 2, 1)}, 0.25, 5);
  const std::vector<MeasurementRecord> batch{{RobotId{1}, 5, Vec2(0.5, 2.0), 0, 1.9},
                                             {RobotId{2}, 5, Vec2(2.0, 0.2), 0, 2.1}};
  const Belief joint = update(b, batch, sensor);

  // Oracle: the same linearization point (the prior estimate) applied one
  // scalar row at a time.
  Belief seq = b;
  const Vec3 x0 = b.position(0);
  for (const MeasurementRecord& r : batch) {
    const Vec3 d = x0 - Vec3(r.q.x(), r.q.y(), 0.0);
    const double range = d.norm();
    MatrixXd H = MatrixXd::Zero(1, 3);
    H.row(0) = (d / range).transpose();
    VectorXd innov(1);
    innov(0) = r.y - range - (H * (seq.xhat - b.xhat))(0);
    const double s = sensor.sigma(range);
    seq = kalman_update(seq, H, innov, MatrixXd::Constant(1, 1, s * s));
  }
  CHECK((joint.xhat - seq.xhat).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((joint.cov - seq.cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("predicted-only update changes covariance but not the estimate") {
  const SensorModel sensor;
  const Belief b = belief_at({Vec3(2, 2, 1)}, 0.25, 3);
  const std::vector<MeasurementRecord> batch{{RobotId{1}, 3, Vec2(1.0, 2.0), 0, 99.0}};
  const Belief u = update(b, batch, sensor, UpdateMode::PredictedOnly);
  CHECK((u.xhat - b.xhat).norm() == 0.0);
  CHECK(uncertainty(u) == doctest::Approx(0.25));  // two directions unobserved
  CHECK(u.cov.trace() < b.cov.trace());
}

TEST_CASE("uninformative measurement leaves covariance unchanged") {
  Belief b = belief_at({Vec3(1, 2, 3)}, 0.25);
  MatrixXd H = MatrixXd::Zero(1, 3);
  H(0, 0) = 1.0;
  const Belief u = kalman_update(b, H, VectorXd::Ones(1), MatrixXd::Constant(1, 1, 1e12));
  CHECK((u.cov - b.cov).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("singular innovation is reported") {
  Belief b = belief_at({Vec3(1, 2, 3)}, 0.25);
  b.cov.setZero();
  MatrixXd H = MatrixXd::Zero(1, 3);
  H(0, 0) = 1.0;
  CHECK_THROWS_AS(kalman_update(b, H, VectorXd::Ones(1), MatrixXd::Zero(1, 1)), SingularInnovation);
}

TEST_CASE("linear fusion equals batch least squares") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  Belief b;
  b.xhat = VectorXd(3);
  b.xhat << 1.0, -2.0, 0.5;
  b.cov = 0.3 * MatrixXd::Identity(3, 3);
  MatrixXd H(5, 3);
  VectorXd z(5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) H(i, j) = n(rng);
    z(i) = n(rng);
  }
  const MatrixXd Rm = 0.04 * MatrixXd::Identity(5, 5);
  const Belief stacked = kalman_update(b, H, z - H * b.xhat, Rm);
  const MatrixXd info = b.cov.inverse() + H.transpose() * Rm.inverse() * H;
  const MatrixXd C = info.inverse();
  const VectorXd x = C * (b.cov.inverse() * b.xhat + H.transpose() * Rm.inverse() * z);
  CHECK((stacked.xhat - x).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((stacked.cov - C).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("uncertainty metric") {
  CHECK(uncertainty(belief_at({Vec3(0, 0, 0), Vec3(1, 1, 1)}, 0.25)) == doctest::Approx(0.25));

  Belief d;
  d.xhat = VectorXd::Zero(2);
  d.cov = MatrixXd::Zero(2, 2);
  d.cov(0, 0) = 0.1;
  d.cov(1, 1) = 0.9;
  CHECK(uncertainty(d) == doctest::Approx(0.9));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) = n(rng);
    Belief b;
    b.xhat = VectorXd::Zero(6);
    b.cov = m * m.transpose() + 0.1 * MatrixXd::Identity(6, 6);
    CHECK(std::abs(uncertainty(b) - power_iteration(b.cov)) < 1e-8);
    b.cov.block<3, 3>(0, 3).setZero();
    b.cov.block<3, 3>(3, 0).setZero();
    CHECK(std::abs(uncertainty(b) - power_iteration(b.cov)) < 1e-8);
    CHECK(std::abs(block_uncertainty(b, 1) - power_iteration(b.cov.block<3, 3>(3, 3))) < 1e-8);
  }
}

TEST_CASE("belief validation") {
  Belief b = belief_at({Vec3(0, 0, 0)}, 0.25);
  CHECK_NOTHROW(b.validate());
  b.cov(0, 1) = 0.1;
  CHECK_THROWS_AS(b.validate(), Error);
  b = belief_at({Vec3(0, 0, 0)}, 0.25);
  b.xhat(0) = std::nan("");
  CHECK_THROWS_AS(b.validate(), Error);

  TargetModel m;
  CHECK_NOTHROW(m.validate());
  m.Q(0, 0) = -1.0;
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("input profiles") {
  TargetModel line;
  line.origin = Vec3(0, 0, 1);
  line.input = WaypointInput{{Vec3(1, 0, 1)}, 0.1};
  CHECK((line.nominal(5) - Vec3(0.5, 0, 1)).norm() < 1e-12);
  CHECK((line.input_at(2) - Vec3(0.1, 0, 0)).norm() < 1e-12);
  CHECK((line.nominal(15) - Vec3(0.5, 0, 1)).norm() < 1e-12);  // reverses at the end

  TargetModel circle;
  circle.origin = Vec3(2, 2, 1);
  circle.input = CircularInput{0.5, 40, 0.3};
  CHECK((circle.nominal(40) - circle.origin).norm() < 1e-9);
  CHECK((circle.nominal(20) - circle.origin).norm() == doctest::Approx(1.0));
}

TEST_CASE("path cost without targets in range") {
  std::vector<TargetModel> models(2);
  models[0].Q = 1e-3 * Eigen::Matrix3d::Identity();
  models[1].Q = 2e-3 * Eigen::Matrix3d::Identity();
  const Belief b = belief_at({Vec3(9, 9, 1), Vec3(8, 9, 1)}, 0.25, 10);
  const SensingScene scene{models, SensorModel{}, {}, 1};
  auto far = [](TimeStep, std::vector<Vec2>& out) { out.push_back(Vec2(-20.0, -20.0)); };
  const CostIncrement inc = path_cost(b, 20, scene, far);
  // Oracle: per step, the second target's variance grows by 2e-3.
  double expected = 0.0;
  for (int k = 1; k <= 10; ++k) expected += 0.25 + 2e-3 * k;
  CHECK(inc.cost == doctest::Approx(expected).epsilon(1e-12));
  CHECK(inc.belief.t == 20);

  CHECK(path_cost(b, 10, scene, far).cost == 0.0);

  // Additivity: splitting the interval gives the same total.
  const CostIncrement first = path_cost(b, 14, scene, far);
  const CostIncrement second = path_cost(first.belief, 20, scene, far);
  CHECK(std::abs(first.cost + second.cost - inc.cost) < 1e-9);
}

TEST_CASE("path cost fuses virtual measurements in range") {
  std::vector<TargetModel> models(1);
  const Belief b = belief_at({Vec3(2, 2, 1)}, 0.25, 0);
  const SensingScene scene{models, SensorModel{}, {}, 1};
  auto near = [](TimeStep, std::vector<Vec2>& out) {
    out.push_back(Vec2(1.5, 2.0));
    out.push_back(Vec2(2.0, 1.5));
    out.push_back(Vec2(2.5, 2.0));  // three sight lines span all three axes
  };
  auto far = [](TimeStep, std::vector<Vec2>& out) { out.push_back(Vec2(-20.0, -20.0)); };
  const CostIncrement seen = path_cost(b, 10, scene, near);
  const CostIncrement unseen = path_cost(b, 10, scene, far);
  CHECK(seen.cost < unseen.cost);
  CHECK((seen.belief.xhat - b.xhat).norm() == 0.0);
}

TEST_CASE("filter_forward fuses only records in the window") {
  std::vector<TargetModel> models(1);
  models[0].Q = 1e-4 * Eigen::Matrix3d::Identity();
  const Belief b = belief_at({Vec3(2, 2, 1)}, 0.25);
  const std::vector<MeasurementRecord> records{{RobotId{1}, 2, Vec2(1, 2), 0, 1.4},
                                               {RobotId{1}, 5, Vec2(1, 2), 0, 1.45}};
  const Belief upto3 = filter_forward(b, 3, records, models, SensorModel{});
  Belief manual = predict(b, models, 2);
  manual = update(manual, std::span(records).subspan(0, 1), SensorModel{});
  manual = predict(manual, models, 3);
  CHECK((upto3.xhat - manual.xhat).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((upto3.cov - manual.cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(filter_forward(upto3, 2, records, models, SensorModel{}), Error);
}
