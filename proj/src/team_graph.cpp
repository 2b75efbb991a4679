#include "dse/team_graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace dse {

namespace {

std::string not_in_two_message(RobotId robot, std::size_t count) {
  std::ostringstream os;
  os << "robot " << robot << " belongs to " << count << " distinct team(s); every robot must belong to exactly two";
  return os.str();
}

std::string disconnected_message(const std::vector<std::vector<TeamIndex>>& components) {
  std::ostringstream os;
  os << "graph of teams is disconnected; components:";
  for (const auto& comp : components) {
    os << " {";
    for (std::size_t k = 0; k < comp.size(); ++k) os << (k ? "," : "") << "T" << comp[k] + 1;
    os << '}';
  }
  return os.str();
}

}  // namespace

RobotNotInTwoTeams::RobotNotInTwoTeams(RobotId robot, std::size_t team_count)
    : Error(not_in_two_message(robot, team_count)), robot_(robot) {}

DisconnectedTeamGraph::DisconnectedTeamGraph(std::vector<std::vector<TeamIndex>> components)
    : Error(disconnected_message(components)), components_(std::move(components)) {}

TeamGraph TeamGraph::build(std::vector<std::vector<RobotId>> teams) {
  if (teams.empty()) throw Error("team list is empty");
  TeamGraph g;
  for (std::size_t i = 0; i < teams.size(); ++i) {
    auto& team = teams[i];
    if (team.empty()) throw Error("team T" + std::to_string(i + 1) + " is empty");
    std::sort(team.begin(), team.end());
    team.erase(std::unique(team.begin(), team.end()), team.end());
  }

  std::map<RobotId, std::vector<TeamIndex>> seen;
  for (std::size_t i = 0; i < teams.size(); ++i)
    for (RobotId r : teams[i]) seen[r].push_back(i);
  for (const auto& [robot, list] : seen) {
    if (list.size() != 2) throw RobotNotInTwoTeams(robot, list.size());
    g.membership_[robot] = {list[0], list[1]};
  }

  g.teams_ = std::move(teams);
  g.neighbors_.assign(g.teams_.size(), {});
  for (const auto& [robot, pair] : g.membership_) {
    auto link = [&](TeamIndex a, TeamIndex b) {
      auto& n = g.neighbors_[a];
      if (std::find(n.begin(), n.end(), b) == n.end()) n.push_back(b);
    };
    link(pair.first, pair.second);
    link(pair.second, pair.first);
  }
  for (auto& n : g.neighbors_) std::sort(n.begin(), n.end());

  // Connectivity: label components by BFS in index order.
  std::vector<int> label(g.teams_.size(), -1);
  std::vector<std::vector<TeamIndex>> components;
  for (TeamIndex s = 0; s < g.teams_.size(); ++s) {
    if (label[s] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    std::deque<TeamIndex> queue{s};
    label[s] = id;
    while (!queue.empty()) {
      const TeamIndex u = queue.front();
      queue.pop_front();
      components.back().push_back(u);
      for (TeamIndex v : g.neighbors_[u])
        if (label[v] < 0) {
          label[v] = id;
          queue.push_back(v);
        }
    }
    std::sort(components.back().begin(), components.back().end());
  }
  if (components.size() > 1) throw DisconnectedTeamGraph(std::move(components));
  return g;
}

std::vector<RobotId> TeamGraph::robots() const {
  std::vector<RobotId> out;
  out.reserve(membership_.size());
  for (const auto& [robot, pair] : membership_) out.push_back(robot);
  return out;
}

std::pair<TeamIndex, TeamIndex> TeamGraph::teams_of(RobotId robot) const {
  const auto it = membership_.find(robot);
  if (it == membership_.end()) {
    std::ostringstream os;
    os << "unknown robot " << robot;
    throw Error(os.str());
  }
  return it->second;
}

TeamIndex TeamGraph::other_team(RobotId robot, TeamIndex team) const {
  const auto [a, b] = teams_of(robot);
  if (team == a) return b;
  if (team == b) return a;
  std::ostringstream os;
  os << "robot " << robot << " is not a member of team T" << team + 1;
  throw Error(os.str());
}

bool TeamGraph::adjacent(TeamIndex a, TeamIndex b) const {
  const auto& n = neighbors_.at(a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::size_t TeamGraph::max_degree() const {
  std::size_t d = 0;
  for (const auto& n : neighbors_) d = std::max(d, n.size());
  return d;
}

std::vector<std::pair<TeamIndex, TeamIndex>> TeamGraph::edges() const {
  std::vector<std::pair<TeamIndex, TeamIndex>> out;
  for (TeamIndex i = 0; i < neighbors_.size(); ++i)
    for (TeamIndex j : neighbors_[i])
      if (i < j) out.emplace_back(i, j);
  return out;
}

std::vector<int> TeamGraph::hop_distances(TeamIndex source) const {
  std::vector<int> dist(teams_.size(), -1);
  std::deque<TeamIndex> queue{source};
  dist.at(source) = 0;
  while (!queue.empty()) {
    const TeamIndex u = queue.front();
    queue.pop_front();
    for (TeamIndex v : neighbors_[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

int TeamGraph::longest_shortest_path() const {
  int longest = 0;
  for (TeamIndex s = 0; s < teams_.size(); ++s) {
    const auto dist = hop_distances(s);
    longest = std::max(longest, *std::max_element(dist.begin(), dist.end()));
  }
  return longest + 1;
}

int delay_bound(const TeamGraph& graph, int period) {
  if (period < 2) throw Error("schedule period must be at least 2");
  return (period - 1) * graph.longest_shortest_path();
}

int delay_bound_edge_count(const TeamGraph& graph, int period) {
  if (period < 2) throw Error("schedule period must be at least 2");
  return (period - 1) * (graph.longest_shortest_path() - 1);
}

}  // namespace dse
