#include "dse/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace dse {

namespace {

std::string robot_message(RobotId robot) {
  std::ostringstream os;
  os << "unknown robot " << robot;
  return os.str();
}

}  // namespace

UnknownRobot::UnknownRobot(RobotId robot) : Error(robot_message(robot)) {}
UnknownTeam::UnknownTeam(TeamIndex team) : Error("unknown team T" + std::to_string(team + 1)) {}

Schedule Schedule::synthesize(const TeamGraph& graph) {
  const std::size_t m = graph.team_count();
  std::vector<TeamIndex> order(m);
  std::iota(order.begin(), order.end(), TeamIndex{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TeamIndex a, TeamIndex b) { return graph.degree(a) > graph.degree(b); });

  std::vector<int> slots(m, 0);
  int colors = 0;
  for (TeamIndex team : order) {
    std::vector<bool> used(graph.max_degree() + 2, false);
    for (TeamIndex n : graph.neighbors(team))
      if (slots[n] > 0) used[static_cast<std::size_t>(slots[n])] = true;
    int c = 1;
    while (used[static_cast<std::size_t>(c)]) ++c;
    slots[team] = c;
    colors = std::max(colors, c);
  }
  // A single-color graph still needs two slots so every robot's two teams
  // get distinct epochs; this only happens for edgeless graphs, which the
  // two-team membership rule already excludes.
  return from_slots(graph, std::move(slots), std::max(colors, 2));
}

Schedule Schedule::from_slots(const TeamGraph& graph, std::vector<int> slots, int period) {
  if (slots.size() != graph.team_count()) throw Error("slot table size does not match team count");
  if (period < 1) throw Error("schedule period must be positive");
  Schedule s;
  s.slots_ = std::move(slots);
  s.period_ = period;
  for (RobotId r : graph.robots()) s.membership_[r] = graph.teams_of(r);
  return s;
}

int Schedule::slot(TeamIndex team) const {
  if (team >= slots_.size()) throw UnknownTeam(team);
  return slots_[team];
}

ScheduleEntry Schedule::event_at(RobotId robot, long epoch) const {
  const auto it = membership_.find(robot);
  if (it == membership_.end()) throw UnknownRobot(robot);
  if (epoch < 1) throw Error("epochs are 1-based");
  const long phase = (epoch - 1) % period_ + 1;
  const auto [a, b] = it->second;
  if (slots_[a] == phase) return a;
  if (slots_[b] == phase) return b;
  return std::nullopt;
}

std::vector<ScheduleEntry> Schedule::sequence(RobotId robot) const {
  std::vector<ScheduleEntry> seq;
  seq.reserve(static_cast<std::size_t>(period_));
  for (long k = 1; k <= period_; ++k) seq.push_back(event_at(robot, k));
  return seq;
}

std::vector<long> Schedule::team_epochs(TeamIndex team, long horizon) const {
  if (team >= slots_.size()) throw UnknownTeam(team);
  if (horizon < 1) throw Error("horizon must be at least 1");
  std::vector<long> out;
  for (long k = slots_[team]; k <= horizon; k += period_) out.push_back(k);
  return out;
}

long Schedule::next_epoch(TeamIndex team, long after) const {
  const long s = slot(team);
  if (after < s) return s;
  const long n = (after - s) / period_ + 1;
  return s + n * period_;
}

bool validate(const Schedule& schedule, const TeamGraph& graph) {
  const int period = schedule.period();
  if (period < 1 || schedule.team_count() != graph.team_count()) return false;
  for (int s : schedule.slots())
    if (s < 1 || s > period) return false;
  for (const auto& [a, b] : graph.edges())
    if (schedule.slot(a) == schedule.slot(b)) return false;
  for (RobotId r : graph.robots()) {
    const auto [a, b] = graph.teams_of(r);
    int count_a = 0, count_b = 0;
    for (long k = 1; k <= period; ++k) {
      const long phase = k;
      if (schedule.slot(a) == phase) ++count_a;
      if (schedule.slot(b) == phase) ++count_b;
      if (schedule.slot(a) == phase && schedule.slot(b) == phase) return false;
    }
    if (count_a != 1 || count_b != 1) return false;
  }
  return true;
}

}  // namespace dse
