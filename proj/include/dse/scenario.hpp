#pragma once

#include "dse/estimator.hpp"
#include "dse/geometry.hpp"
#include "dse/planner.hpp"
#include "dse/schedule.hpp"
#include "dse/team_graph.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dse {

/// Load or validation failure. `where` is a JSON path ($.targets[2].Q) or a
/// line:column position for syntax errors.
class ConfigError : public Error {
 public:
  ConfigError(std::string where, const std::string& what);
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct RobotSpec {
  RobotId id{};
  Vec2 start = Vec2::Zero();
};

struct TargetSpec {
  Vec3 x0 = Vec3::Zero();
  Vec3 xhat0 = Vec3::Zero();
  TargetModel model;  // model.origin mirrors x0
};

struct ScheduleOverride {
  int period = 2;
  std::vector<int> slots;
};

struct Scenario {
  std::string name = "scenario";
  Workspace workspace;
  SensorModel sensor;
  std::vector<RobotSpec> robots;
  std::map<std::string, std::vector<std::vector<RobotId>>> team_graphs;
  std::string team_graph;
  std::optional<ScheduleOverride> schedule;
  std::vector<TargetSpec> targets;
  double initial_variance = 0.25;
  TimeStep measurement_period = 1;
  PlannerParams planner;
  std::string strategy = "intermittent";
  TimeStep t_end = 500;
  std::uint64_t seed = 0;
  double formation_spacing = 0.75;  // chain spacing of the all-time formation, in units of R
  double meeting_spacing = 0.75;    // heuristic meeting segment spacing, in units of R

  TeamGraph build_team_graph() const;
  Schedule build_schedule(const TeamGraph& graph) const;
  std::vector<TargetModel> models() const;
  Belief initial_belief() const;
  std::vector<Vec3> initial_truth() const;
  const RobotSpec& robot(RobotId id) const;
  /// Robots that belong to the selected team graph, in declaration order.
  std::vector<RobotSpec> active_robots() const;

  /// Cross-checks every section; throws ConfigError naming the offending path.
  void validate() const;
};

inline const std::vector<std::string> kStrategies{"intermittent", "heuristic", "all-time"};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);

/// Resolves a bundled scenario name (paper_8x8, paper_4x4) or a file path.
std::filesystem::path resolve_scenario(const std::string& name_or_path);

}  // namespace dse
