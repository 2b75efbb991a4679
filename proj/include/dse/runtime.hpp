#pragma once

#include "dse/estimator.hpp"
#include "dse/planner.hpp"
#include "dse/scenario.hpp"
#include "dse/world.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace dse {

/// Every measurement taken in a run. Records are appended in key order, so
/// index order is chronological order.
class RecordStore {
 public:
  std::size_t add(const MeasurementRecord& r);
  const MeasurementRecord& at(std::size_t index) const { return records_.at(index); }
  std::size_t size() const { return records_.size(); }
  const std::vector<MeasurementRecord>& all() const { return records_; }
  /// Records for the given sorted indices, in the same order.
  std::vector<MeasurementRecord> gather(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<MeasurementRecord> records_;
};

/// What a robot owns: indices into the record store plus filter checkpoints
/// computed over exactly those records.
struct RobotLog {
  RobotId robot{};
  std::vector<std::size_t> owned;        // sorted, unique
  std::map<TimeStep, Belief> checkpoints;
};

/// Deduplicated union of the members' record sets; every member ends up
/// owning it. A member's checkpoints at or after the oldest record it just
/// received no longer match its record set and are dropped.
std::vector<std::size_t> exchange(const std::vector<RobotLog*>& members, const RecordStore& store);

/// Filters `records` (sorted) forward to time t from the newest member
/// checkpoint not after t, or from `initial` if there is none.
Belief refilter(const std::vector<MeasurementRecord>& records, const std::vector<const RobotLog*>& members,
                const Belief& initial, TimeStep t, std::span<const TargetModel> models, const SensorModel& sensor);

/// Fusion of every record taken up to t (the fictitious network estimate).
Belief global_oracle(std::span<const MeasurementRecord> records, const Belief& initial, TimeStep t,
                     std::span<const TargetModel> models, const SensorModel& sensor);

struct TeamEventLog {
  TeamIndex team = 0;
  long epoch = 0;
  TimeStep t = 0;
  std::vector<RobotId> members;
  std::vector<Vec2> positions;
  std::vector<TimeStep> arrivals;     // when each member reached its meeting point
  std::vector<RecordKey> missing;     // network records up to t not fused by the team
  std::size_t fused = 0;
  TimeStep t_star = 0;
  double e_d = 0.0;
  double lambda = 0.0;                // uncertainty of the team estimate at t
  std::string plan_status;            // how the next meeting was planned
  double plan_cost = 0.0;
  std::size_t plan_nodes = 0;
  TimeStep next_time = 0;
};

struct SimulationLog {
  std::string strategy;
  std::uint64_t seed = 0;
  TimeStep t_end = 0;
  int period = 0;
  int delay_bound = 0;
  std::vector<std::vector<Vec3>> truth;       // per time step
  std::vector<Eigen::VectorXd> global_xhat;   // per time step
  std::vector<double> e_loc;                  // per time step
  std::vector<double> lambda;                 // per time step
  std::vector<MeasurementRecord> records;
  std::map<RobotId, std::vector<Vec2>> tracks;            // position per time step
  std::map<RobotId, std::vector<TimeStep>> epoch_end;     // entry k - 1 is the end of epoch k
  std::vector<TeamEventLog> events;
  std::vector<std::string> diagnostics;
};

struct Summary {
  double mean_e_loc = 0.0;
  double mean_lambda = 0.0;
};

/// Time averages over t = 0..t_end divided by t_end.
Summary summarize(const SimulationLog& log);

/// Planned meeting of one team: per-member waypoints from the member's root
/// time to the common meeting time.
struct MeetingPlan {
  TimeStep t_final = 0;
  std::vector<std::vector<Vec2>> waypoints;
  std::vector<TimeStep> arrivals;
  std::string status;
  double cost = 0.0;
  std::size_t nodes = 0;
};

struct MeetingRequest {
  TeamIndex team = 0;
  long epoch = 0;  // epoch of the meeting being planned
  std::vector<RobotId> members;
  std::vector<Vec2> root_positions;
  std::vector<TimeStep> root_times;
  Belief belief;  // team estimate at the planning time
};

using MeetingPlanner = std::function<MeetingPlan(const MeetingRequest&)>;

/// Geodesic travel at u_max from each root to its goal, padded to a common
/// arrival time. Throws NoPath.
MeetingPlan geodesic_meeting(const MeetingRequest& req, const std::vector<Vec2>& goals, const Workspace& ws,
                             double u_max);

/// Points spaced `spacing` apart on a segment through `center` at angle `angle`.
std::vector<Vec2> line_formation(const Vec2& center, std::size_t count, double spacing, double angle);

/// Runs the team-based loop with the given meeting planner; the first meeting
/// of every team uses the a-priori geodesic paths.
SimulationLog run_teams(const Scenario& scenario, std::uint64_t seed, const std::string& strategy,
                        const MeetingPlanner& planner);

/// The proposed method: meetings planned by the sampling-based planner.
SimulationLog run_intermittent(const Scenario& scenario, std::uint64_t seed);

/// Dispatches on the strategy name (intermittent, heuristic, all-time).
SimulationLog run(const Scenario& scenario, std::uint64_t seed, const std::string& strategy);

}  // namespace dse
