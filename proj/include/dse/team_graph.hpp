#pragma once

#include "dse/types.hpp"

#include <map>
#include <utility>
#include <vector>

namespace dse {

class RobotNotInTwoTeams : public Error {
 public:
  RobotNotInTwoTeams(RobotId robot, std::size_t team_count);
  RobotId robot() const { return robot_; }

 private:
  RobotId robot_;
};

class DisconnectedTeamGraph : public Error {
 public:
  explicit DisconnectedTeamGraph(std::vector<std::vector<TeamIndex>> components);
  /// Connected components of the offending graph, as zero-based team indices.
  const std::vector<std::vector<TeamIndex>>& components() const { return components_; }

 private:
  std::vector<std::vector<TeamIndex>> components_;
};

/// Partition of the robots into teams and the induced graph of teams.
///
/// Every robot belongs to exactly two teams and two teams are adjacent iff
/// they share a robot. The graph must be connected. Immutable once built.
class TeamGraph {
 public:
  static TeamGraph build(std::vector<std::vector<RobotId>> teams);

  std::size_t team_count() const { return teams_.size(); }
  std::size_t robot_count() const { return membership_.size(); }

  const std::vector<RobotId>& members(TeamIndex team) const { return teams_.at(team); }
  const std::vector<std::vector<RobotId>>& teams() const { return teams_; }

  /// All robot ids in ascending order.
  std::vector<RobotId> robots() const;
  bool has_robot(RobotId robot) const { return membership_.contains(robot); }

  /// The two teams a robot belongs to, lower index first.
  std::pair<TeamIndex, TeamIndex> teams_of(RobotId robot) const;
  /// The team other than `team` that `robot` belongs to.
  TeamIndex other_team(RobotId robot, TeamIndex team) const;

  bool adjacent(TeamIndex a, TeamIndex b) const;
  const std::vector<TeamIndex>& neighbors(TeamIndex team) const { return neighbors_.at(team); }
  std::size_t degree(TeamIndex team) const { return neighbors_.at(team).size(); }
  std::size_t max_degree() const;
  /// Adjacency as unordered pairs (i < j), sorted.
  std::vector<std::pair<TeamIndex, TeamIndex>> edges() const;

  /// Hop distances from `source` to every team (BFS).
  std::vector<int> hop_distances(TeamIndex source) const;

  /// Longest shortest path, counted in nodes on the path.
  int longest_shortest_path() const;

 private:
  TeamGraph() = default;

  std::vector<std::vector<RobotId>> teams_;
  std::map<RobotId, std::pair<TeamIndex, TeamIndex>> membership_;
  std::vector<std::vector<TeamIndex>> neighbors_;
};

/// Worst-case information propagation delay in epochs, (T - 1) * L with L in nodes.
int delay_bound(const TeamGraph& graph, int period);

/// The same bound with L counted in edges; reported alongside the node-count
/// bound because published numbers for some graphs use this convention.
int delay_bound_edge_count(const TeamGraph& graph, int period);

}  // namespace dse
