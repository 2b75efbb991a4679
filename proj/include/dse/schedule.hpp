#pragma once

#include "dse/team_graph.hpp"

#include <optional>
#include <vector>

namespace dse {

class UnknownRobot : public Error {
 public:
  explicit UnknownRobot(RobotId robot);
};

class UnknownTeam : public Error {
 public:
  explicit UnknownTeam(TeamIndex team);
};

/// One entry of a robot's periodic communication sequence; empty means Idle.
using ScheduleEntry = std::optional<TeamIndex>;

/// Periodic, per-team slot assignment. Each team communicates at epochs
/// slot, slot + T, slot + 2T, ... (epochs and slots are 1-based). A robot's
/// sequence holds its two teams at their slots and Idle elsewhere.
class Schedule {
 public:
  /// Greedy coloring of the team graph in descending-degree order (ties by
  /// index). The period is the number of colors used, at most maxdeg + 1.
  static Schedule synthesize(const TeamGraph& graph);

  /// Wraps an explicit assignment without checking it; see validate().
  static Schedule from_slots(const TeamGraph& graph, std::vector<int> slots, int period);

  int period() const { return period_; }
  std::size_t team_count() const { return slots_.size(); }
  int slot(TeamIndex team) const;
  const std::vector<int>& slots() const { return slots_; }

  /// sched(k) = s((k - 1) mod T + 1). Throws UnknownRobot.
  ScheduleEntry event_at(RobotId robot, long epoch) const;

  /// The robot's finite sequence of length T.
  std::vector<ScheduleEntry> sequence(RobotId robot) const;

  /// Epochs slot(i), slot(i) + T, ... not exceeding `horizon`. Throws UnknownTeam.
  std::vector<long> team_epochs(TeamIndex team, long horizon) const;

  /// First epoch strictly greater than `after` at which `team` communicates.
  long next_epoch(TeamIndex team, long after) const;

 private:
  std::vector<int> slots_;
  int period_ = 0;
  std::map<RobotId, std::pair<TeamIndex, TeamIndex>> membership_;
};

/// True iff slots lie in 1..T, adjacent teams use distinct slots, and every
/// robot's sequence holds each of its teams exactly once per period.
bool validate(const Schedule& schedule, const TeamGraph& graph);

}  // namespace dse
