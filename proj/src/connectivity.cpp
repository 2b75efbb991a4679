#include "dse/connectivity.hpp"

namespace dse {

Eigen::MatrixXd disk_laplacian(std::span<const Vec2> positions, double range) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((positions[static_cast<std::size_t>(i)] - positions[static_cast<std::size_t>(j)]).norm() > range) continue;
      L(i, j) = L(j, i) = -1.0;
      L(i, i) += 1.0;
      L(j, j) += 1.0;
    }
  return L;
}

double algebraic_connectivity(std::span<const Vec2> positions, double range) {
  if (positions.size() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(disk_laplacian(positions, range), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(1);
}

bool disk_connected(std::span<const Vec2> positions, double range) {
  return positions.size() < 2 || algebraic_connectivity(positions, range) > 1e-9;
}

}  // namespace dse
