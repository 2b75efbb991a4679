#pragma once

#include "dse/types.hpp"

#include <span>

namespace dse {

/// Laplacian of the disk graph: robots closer than `range` (inclusive) are linked.
Eigen::MatrixXd disk_laplacian(std::span<const Vec2> positions, double range);

/// Second-smallest Laplacian eigenvalue of the disk graph (0 for fewer than two robots).
double algebraic_connectivity(std::span<const Vec2> positions, double range);

/// Connected disk graph; a single robot is trivially connected.
bool disk_connected(std::span<const Vec2> positions, double range);

}  // namespace dse
