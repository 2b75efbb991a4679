#pragma once

#include "dse/runtime.hpp"

namespace dse {

/// Fixed robot offsets around a virtual center.
struct FormationSpec {
  std::vector<Vec2> offsets;

  /// Horizontal chain with the given spacing, centered on the origin.
  static FormationSpec chain(std::size_t count, double spacing);
  /// Algebraic connectivity of the offsets' disk graph at range R.
  double connectivity(double comm_range) const;
};

/// The whole network moves as one connected formation; its center follows
/// sampling-based plans over the network estimate and replans whenever a
/// plan runs out. All measurements are fused every step.
SimulationLog run_all_time(const Scenario& scenario, std::uint64_t seed);

/// Same teams and schedules as the proposed method, but every meeting point
/// is drawn at random and members travel there along geodesics.
SimulationLog run_heuristic(const Scenario& scenario, std::uint64_t seed);

}  // namespace dse
