#pragma once

#include "dse/estimator.hpp"
#include "dse/geometry.hpp"
#include "dse/rng.hpp"

#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace dse {

struct PlannerParams {
  int n_sample = 600;
  int n_explore = -1;     // uniform-phase samples; negative means 30% of n_sample
  double epsilon = 0.5;   // max step per robot (m)
  double gamma = 3.0;     // near-radius scale
  double delta = 0.0144;  // uncertainty threshold (m^2)
  double u_max = 0.1;     // m per step

  int explore_count() const { return n_explore >= 0 ? n_explore : (3 * n_sample) / 10; }
  /// Throws Error on non-positive values.
  void validate() const;
};

class NoGoalFound : public Error {
 public:
  using Error::Error;
};

/// A planned agent: a robot, or a rigid formation whose sensors sit at
/// fixed offsets from the planned point.
struct PlanAgent {
  Vec2 start = Vec2::Zero();
  TimeStep start_time = 0;
  std::vector<Vec2> offsets{Vec2::Zero()};
};

struct PlanProblem {
  std::vector<PlanAgent> agents;
  Belief belief;  // valid at the earliest start time
  Workspace workspace;
  std::vector<TargetModel> models;
  SensorModel sensor;
  TimeStep measure_period = 1;
};

struct PlanNode {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::vector<Vec2> pos;
  std::vector<TimeStep> arrival;
  double cost = 0.0;
  std::size_t parent = kNone;
  std::vector<std::size_t> children;
  Belief belief;  // at t_min()
  bool connected = false;

  TimeStep t_min() const;
  TimeStep t_max() const;
  TimeStep delay() const { return t_max() - t_min(); }
};

/// Joint point produced by steering, not yet in the tree.
struct JointState {
  std::vector<Vec2> pos;
  std::vector<TimeStep> arrival;
};

struct PlanResult {
  std::size_t goal = 0;
  TimeStep t_final = 0;
  double cost = 0.0;
  std::optional<std::size_t> constraint_target;  // empty when the uncertainty constraint was dropped
  std::vector<std::vector<Vec2>> waypoints;      // per agent, one point per step from its start time to t_final
  std::vector<JointState> joint_path;            // root ... goal
  Belief belief;                                 // predicted at t_final
  std::size_t tree_size = 0;
  int iterations = 0;
};

/// Draws a joint sample: uniform over free space while iter <= B, then
/// Gaussian (std 2R per coordinate) around a uniformly drawn meeting point.
std::vector<Vec2> sample_joint(int iter, Rng& rng, const PlannerParams& params, const Workspace& ws,
                               std::size_t agents);

/// Time-matching steering step. Returns nothing when the step length is zero.
std::optional<JointState> steer(const JointState& from, const std::vector<Vec2>& toward, const PlannerParams& params);

/// Connected at range R, synchronized, and (when a constraint target is
/// given) that target's uncertainty within delta.
bool goal_membership(const JointState& v, const Belief& belief, double comm_range, std::optional<std::size_t> target,
                     double delta);

/// Sampling-based planner over the joint configuration space of one team.
class Planner {
 public:
  Planner(PlanProblem problem, PlannerParams params, std::uint64_t seed);

  const std::vector<PlanNode>& nodes() const { return nodes_; }
  const PlannerParams& params() const { return params_; }
  const PlanProblem& problem() const { return problem_; }
  /// Targets ordered by the root belief's uncertainty, most uncertain first.
  const std::vector<std::size_t>& target_order() const { return order_; }
  /// Nodes currently in the goal set for the most uncertain target.
  std::vector<std::size_t> goal_nodes() const;
  bool in_goal_set(std::size_t node, std::optional<std::size_t> target) const;

  std::size_t nearest(const std::vector<Vec2>& point) const;
  std::vector<std::size_t> near(const std::vector<Vec2>& point) const;
  double near_radius() const;
  bool edge_collision_free(const std::vector<Vec2>& from, const std::vector<Vec2>& to) const;
  /// Cost and belief of `child` reached from tree node `parent`.
  CostIncrement edge_cost(std::size_t parent, const JointState& child) const;
  /// Whether `child` can follow `parent` in time at bounded speed without increasing the delay.
  bool time_consistent(std::size_t parent, const JointState& child) const;

  /// Inserts `v_new` under the cheapest admissible parent among `nearest` and `near_set`.
  std::optional<std::size_t> extend(const JointState& v_new, std::size_t nearest, const std::vector<std::size_t>& near_set);
  /// Reconnects synchronized near nodes through `v_new` when cheaper; returns the count.
  int rewire(std::size_t v_new, const std::vector<std::size_t>& near_set);

  /// One sample-steer-extend-rewire round. Returns the inserted node, if any.
  std::optional<std::size_t> iterate();
  /// Runs the sampling budget and returns the cheapest goal. Throws NoGoalFound.
  PlanResult plan();
  PlanResult result_for(std::size_t node, std::optional<std::size_t> target) const;

  /// Position of agent `agent` at time t along the root-to-`node` path; empty
  /// before the agent's start time.
  std::optional<Vec2> position_at(std::size_t node, std::size_t agent, TimeStep t) const;

  /// Writes the node table as CSV.
  void dump(std::ostream& os) const;

 private:
  std::optional<Vec2> position_on_edge(std::size_t parent, const JointState& child, std::size_t agent, TimeStep t) const;
  void refresh(std::size_t node);
  std::optional<std::pair<std::size_t, std::optional<std::size_t>>> select() const;

  PlanProblem problem_;
  PlannerParams params_;
  Rng rng_;
  std::vector<PlanNode> nodes_;
  std::vector<std::size_t> order_;
  int iter_ = 0;
};

}  // namespace dse
