#include "dse/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dse {

using nlohmann::json;

ConfigError::ConfigError(std::string where, const std::string& what)
    : Error(where + ": " + what), where_(std::move(where)) {}

namespace {

std::string key_path(const std::string& base, const std::string& key) { return base + "." + key; }
std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(key_path(path, key), "missing required field");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path, std::optional<std::size_t> size = std::nullopt) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  if (size && j.size() != *size) throw ConfigError(path, "expected " + std::to_string(*size) + " entries");
  return j;
}

template <class T, class F>
void optional_field(const json& j, const std::string& key, const std::string& path, T& out, F convert) {
  if (const auto it = j.find(key); it != j.end()) out = convert(*it, key_path(path, key));
}

Vec2 as_vec2(const json& j, const std::string& path) {
  as_array(j, path, 2);
  return {as_number(j[0], index_path(path, 0)), as_number(j[1], index_path(path, 1))};
}

Vec3 as_vec3(const json& j, const std::string& path) {
  as_array(j, path, 3);
  return {as_number(j[0], index_path(path, 0)), as_number(j[1], index_path(path, 1)),
          as_number(j[2], index_path(path, 2))};
}

Eigen::Matrix3d as_mat3(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>() * Eigen::Matrix3d::Identity();
  as_array(j, path, 3);
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) m.row(r) = as_vec3(j[static_cast<std::size_t>(r)], index_path(path, static_cast<std::size_t>(r)));
  return m;
}

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json mat_json(const Eigen::Matrix3d& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back(vec_json(Vec3(m.row(r).transpose())));
  return out;
}

InputProfile parse_input(const json& j, const std::string& path) {
  const std::string type = as_string(require(j, "type", path), key_path(path, "type"));
  if (type == "stationary") return StationaryInput{};
  if (type == "waypoints") {
    WaypointInput in;
    const std::string wp = key_path(path, "waypoints");
    const json& arr = as_array(require(j, "waypoints", path), wp);
    for (std::size_t i = 0; i < arr.size(); ++i) in.waypoints.push_back(as_vec3(arr[i], index_path(wp, i)));
    optional_field(j, "speed", path, in.speed, as_number);
    if (in.speed < 0.0) throw ConfigError(key_path(path, "speed"), "must be non-negative");
    return in;
  }
  if (type == "circular") {
    CircularInput in;
    optional_field(j, "radius", path, in.radius, as_number);
    optional_field(j, "period", path, in.period, as_integer);
    optional_field(j, "phase", path, in.phase, as_number);
    if (in.period < 1) throw ConfigError(key_path(path, "period"), "must be at least 1");
    if (in.radius < 0.0) throw ConfigError(key_path(path, "radius"), "must be non-negative");
    return in;
  }
  throw ConfigError(key_path(path, "type"), "unknown input type '" + type + "'");
}

json input_json(const InputProfile& input) {
  return std::visit(
      [](const auto& in) -> json {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, StationaryInput>) {
          return {{"type", "stationary"}};
        } else if constexpr (std::is_same_v<T, WaypointInput>) {
          json wps = json::array();
          for (const Vec3& w : in.waypoints) wps.push_back(vec_json(w));
          return {{"type", "waypoints"}, {"waypoints", wps}, {"speed", in.speed}};
        } else {
          return {{"type", "circular"}, {"radius", in.radius}, {"period", in.period}, {"phase", in.phase}};
        }
      },
      input);
}

std::vector<std::vector<RobotId>> parse_teams(const json& j, const std::string& path) {
  as_array(j, path);
  std::vector<std::vector<RobotId>> teams;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string tp = index_path(path, i);
    as_array(j[i], tp);
    std::vector<RobotId> team;
    for (std::size_t k = 0; k < j[i].size(); ++k)
      team.push_back(RobotId{static_cast<std::int32_t>(as_integer(j[i][k], index_path(tp, k)))});
    teams.push_back(std::move(team));
  }
  return teams;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (const auto pos = msg.find("parse error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError(line_column(text, e.byte == 0 ? 0 : e.byte - 1), msg);
  }
  const std::string top = "$";
  if (!root.is_object()) throw ConfigError(top, "expected an object");

  Scenario s;
  optional_field(root, "name", top, s.name, as_string);

  {
    const std::string wp = key_path(top, "workspace");
    const json& w = require(root, "workspace", top);
    if (const auto it = w.find("bounds"); it != w.end()) {
      const std::string bp = key_path(wp, "bounds");
      Bounds& b = s.workspace.bounds;
      optional_field(*it, "xmin", bp, b.xmin, as_number);
      optional_field(*it, "ymin", bp, b.ymin, as_number);
      optional_field(*it, "xmax", bp, b.xmax, as_number);
      optional_field(*it, "ymax", bp, b.ymax, as_number);
      optional_field(*it, "zmin", bp, b.zmin, as_number);
      optional_field(*it, "zmax", bp, b.zmax, as_number);
    }
    if (const auto it = w.find("obstacles"); it != w.end()) {
      const std::string op = key_path(wp, "obstacles");
      as_array(*it, op);
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string ip = index_path(op, i);
        const json& seg = as_array((*it)[i], ip, 4);
        double v[4];
        for (std::size_t k = 0; k < 4; ++k) v[k] = as_number(seg[k], index_path(ip, k));
        s.workspace.obstacles.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
      }
    }
    optional_field(w, "comm_range", wp, s.workspace.comm_range, as_number);
    optional_field(w, "sense_range", wp, s.workspace.sense_range, as_number);
  }

  if (const auto it = root.find("sensor"); it != root.end()) {
    const std::string sp = key_path(top, "sensor");
    SensorModel& m = s.sensor;
    optional_field(*it, "max_range", sp, m.max_range, as_number);
    optional_field(*it, "sigma_near", sp, m.sigma_near, as_number);
    optional_field(*it, "slope", sp, m.slope, as_number);
    optional_field(*it, "intercept", sp, m.intercept, as_number);
    optional_field(*it, "sigma_far", sp, m.sigma_far, as_number);
    optional_field(*it, "near_break", sp, m.near_break, as_number);
    optional_field(*it, "far_break", sp, m.far_break, as_number);
  }

  {
    const std::string rp = key_path(top, "robots");
    const json& arr = as_array(require(root, "robots", top), rp);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = index_path(rp, i);
      RobotSpec r;
      r.id = RobotId{static_cast<std::int32_t>(as_integer(require(arr[i], "id", ip), key_path(ip, "id")))};
      r.start = as_vec2(require(arr[i], "start", ip), key_path(ip, "start"));
      s.robots.push_back(r);
    }
  }

  {
    const std::string gp = key_path(top, "team_graphs");
    const json& graphs = require(root, "team_graphs", top);
    if (!graphs.is_object() || graphs.empty()) throw ConfigError(gp, "expected a non-empty object");
    for (const auto& [name, teams] : graphs.items()) s.team_graphs[name] = parse_teams(teams, key_path(gp, name));
    s.team_graph = s.team_graphs.begin()->first;
    optional_field(root, "team_graph", top, s.team_graph, as_string);
  }

  if (const auto it = root.find("schedule"); it != root.end() && !it->is_null()) {
    const std::string sp = key_path(top, "schedule");
    ScheduleOverride o;
    o.period = static_cast<int>(as_integer(require(*it, "period", sp), key_path(sp, "period")));
    const std::string lp = key_path(sp, "slots");
    const json& slots = as_array(require(*it, "slots", sp), lp);
    for (std::size_t i = 0; i < slots.size(); ++i)
      o.slots.push_back(static_cast<int>(as_integer(slots[i], index_path(lp, i))));
    s.schedule = o;
  }

  {
    const std::string tp = key_path(top, "targets");
    const json& arr = as_array(require(root, "targets", top), tp);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = index_path(tp, i);
      TargetSpec t;
      t.x0 = as_vec3(require(arr[i], "x0", ip), key_path(ip, "x0"));
      t.xhat0 = as_vec3(require(arr[i], "xhat0", ip), key_path(ip, "xhat0"));
      optional_field(arr[i], "A", ip, t.model.A, as_mat3);
      optional_field(arr[i], "B", ip, t.model.B, as_mat3);
      optional_field(arr[i], "Q", ip, t.model.Q, as_mat3);
      optional_field(arr[i], "input", ip, t.model.input, parse_input);
      t.model.origin = t.x0;
      s.targets.push_back(std::move(t));
    }
  }

  optional_field(root, "initial_variance", top, s.initial_variance, as_number);
  optional_field(root, "measurement_period", top, s.measurement_period, as_integer);

  if (const auto it = root.find("planner"); it != root.end()) {
    const std::string pp = key_path(top, "planner");
    PlannerParams& p = s.planner;
    auto as_int = [](const json& j, const std::string& path) { return static_cast<int>(as_integer(j, path)); };
    optional_field(*it, "n_sample", pp, p.n_sample, as_int);
    optional_field(*it, "n_explore", pp, p.n_explore, as_int);
    optional_field(*it, "epsilon", pp, p.epsilon, as_number);
    optional_field(*it, "gamma", pp, p.gamma, as_number);
    optional_field(*it, "delta", pp, p.delta, as_number);
    optional_field(*it, "u_max", pp, p.u_max, as_number);
  }

  optional_field(root, "strategy", top, s.strategy, as_string);
  optional_field(root, "t_end", top, s.t_end, as_integer);
  if (const auto it = root.find("seed"); it != root.end()) {
    if (!it->is_number_unsigned()) throw ConfigError(key_path(top, "seed"), "expected a non-negative integer");
    s.seed = it->get<std::uint64_t>();
  }
  optional_field(root, "formation_spacing", top, s.formation_spacing, as_number);
  optional_field(root, "meeting_spacing", top, s.meeting_spacing, as_number);

  s.validate();
  return s;
}

void Scenario::validate() const {
  const std::string top = "$";
  try {
    workspace.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("$.workspace", e.what());
  }
  if (!(sensor.max_range > 0.0)) throw ConfigError("$.sensor.max_range", "must be positive");

  if (robots.empty()) throw ConfigError("$.robots", "at least one robot is required");
  std::set<RobotId> ids;
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string ip = index_path("$.robots", i);
    if (!ids.insert(robots[i].id).second) throw ConfigError(key_path(ip, "id"), "duplicate robot id");
    if (!workspace.is_free(robots[i].start)) throw ConfigError(key_path(ip, "start"), "start is not in free space");
  }

  const auto it = team_graphs.find(team_graph);
  if (it == team_graphs.end()) throw ConfigError("$.team_graph", "no team graph named '" + team_graph + "'");
  for (const auto& [name, teams] : team_graphs) {
    const std::string gp = key_path("$.team_graphs", name);
    std::set<RobotId> used;
    for (std::size_t i = 0; i < teams.size(); ++i)
      for (std::size_t k = 0; k < teams[i].size(); ++k) {
        if (!ids.contains(teams[i][k]))
          throw ConfigError(index_path(index_path(gp, i), k), "robot " + std::to_string(to_int(teams[i][k])) + " is not declared");
        used.insert(teams[i][k]);
      }
    if (name != team_graph) continue;
    try {
      TeamGraph::build(teams);
    } catch (const Error& e) {
      throw ConfigError(gp, e.what());
    }
  }

  if (schedule) {
    const TeamGraph g = build_team_graph();
    if (schedule->slots.size() != g.team_count()) throw ConfigError("$.schedule.slots", "one slot per team is required");
    if (!dse::validate(Schedule::from_slots(g, schedule->slots, schedule->period), g))
      throw ConfigError("$.schedule", "slots are not a conflict-free schedule for the selected team graph");
  }

  if (targets.empty()) throw ConfigError("$.targets", "at least one target is required");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string ip = index_path("$.targets", i);
    const Bounds& b = workspace.bounds;
    const Vec3& x = targets[i].x0;
    if (!b.contains(x.head<2>()) || x.z() < b.zmin || x.z() > b.zmax) throw ConfigError(key_path(ip, "x0"), "outside the workspace");
    try {
      targets[i].model.validate();
    } catch (const Error& e) {
      throw ConfigError(ip, e.what());
    }
  }
  if (!(initial_variance > 0.0)) throw ConfigError("$.initial_variance", "must be positive");
  if (measurement_period < 1) throw ConfigError("$.measurement_period", "must be at least 1");
  try {
    planner.validate();
  } catch (const Error& e) {
    throw ConfigError("$.planner", e.what());
  }
  if (std::find(kStrategies.begin(), kStrategies.end(), strategy) == kStrategies.end())
    throw ConfigError("$.strategy", "unknown strategy '" + strategy + "'");
  if (t_end < 1) throw ConfigError("$.t_end", "must be at least 1");
  if (!(formation_spacing > 0.0 && formation_spacing <= 1.0))
    throw ConfigError("$.formation_spacing", "must lie in (0, 1] so neighbours stay in range");
  if (!(meeting_spacing > 0.0 && meeting_spacing <= 1.0))
    throw ConfigError("$.meeting_spacing", "must lie in (0, 1] so neighbours stay in range");
}

std::string serialize_scenario(const Scenario& s) {
  json root;
  root["name"] = s.name;
  const Bounds& b = s.workspace.bounds;
  json obstacles = json::array();
  for (const Segment& seg : s.workspace.obstacles) obstacles.push_back({seg.a.x(), seg.a.y(), seg.b.x(), seg.b.y()});
  root["workspace"] = {{"bounds", {{"xmin", b.xmin}, {"ymin", b.ymin}, {"xmax", b.xmax}, {"ymax", b.ymax}, {"zmin", b.zmin}, {"zmax", b.zmax}}},
                       {"obstacles", obstacles},
                       {"comm_range", s.workspace.comm_range},
                       {"sense_range", s.workspace.sense_range}};
  const SensorModel& m = s.sensor;
  root["sensor"] = {{"max_range", m.max_range}, {"sigma_near", m.sigma_near}, {"slope", m.slope},
                    {"intercept", m.intercept}, {"sigma_far", m.sigma_far}, {"near_break", m.near_break},
                    {"far_break", m.far_break}};
  json robots = json::array();
  for (const RobotSpec& r : s.robots) robots.push_back({{"id", to_int(r.id)}, {"start", vec_json(r.start)}});
  root["robots"] = robots;
  json graphs = json::object();
  for (const auto& [name, teams] : s.team_graphs) {
    json arr = json::array();
    for (const auto& team : teams) {
      json t = json::array();
      for (RobotId r : team) t.push_back(to_int(r));
      arr.push_back(t);
    }
    graphs[name] = arr;
  }
  root["team_graphs"] = graphs;
  root["team_graph"] = s.team_graph;
  if (s.schedule) root["schedule"] = {{"period", s.schedule->period}, {"slots", s.schedule->slots}};
  json targets = json::array();
  for (const TargetSpec& t : s.targets)
    targets.push_back({{"x0", vec_json(t.x0)},
                       {"xhat0", vec_json(t.xhat0)},
                       {"A", mat_json(t.model.A)},
                       {"B", mat_json(t.model.B)},
                       {"Q", mat_json(t.model.Q)},
                       {"input", input_json(t.model.input)}});
  root["targets"] = targets;
  root["initial_variance"] = s.initial_variance;
  root["measurement_period"] = s.measurement_period;
  const PlannerParams& p = s.planner;
  root["planner"] = {{"n_sample", p.n_sample}, {"n_explore", p.n_explore}, {"epsilon", p.epsilon},
                     {"gamma", p.gamma}, {"delta", p.delta}, {"u_max", p.u_max}};
  root["strategy"] = s.strategy;
  root["t_end"] = s.t_end;
  root["seed"] = s.seed;
  root["formation_spacing"] = s.formation_spacing;
  root["meeting_spacing"] = s.meeting_spacing;
  return root.dump(2) + "\n";
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open scenario file");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_scenario(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + e.where(), std::string(e.what()).substr(e.where().size() + 2));
  }
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  const std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return p;
  const std::filesystem::path bundled = std::filesystem::path(DSE_SCENARIO_DIR) / (name_or_path + ".json");
  if (p.extension().empty() && std::filesystem::exists(bundled)) return bundled;
  return p;
}

TeamGraph Scenario::build_team_graph() const { return TeamGraph::build(team_graphs.at(team_graph)); }

Schedule Scenario::build_schedule(const TeamGraph& graph) const {
  if (schedule) return Schedule::from_slots(graph, schedule->slots, schedule->period);
  return Schedule::synthesize(graph);
}

std::vector<RobotSpec> Scenario::active_robots() const {
  std::set<RobotId> used;
  for (const auto& team : team_graphs.at(team_graph)) used.insert(team.begin(), team.end());
  std::vector<RobotSpec> out;
  for (const RobotSpec& r : robots)
    if (used.contains(r.id)) out.push_back(r);
  return out;
}

std::vector<TargetModel> Scenario::models() const {
  std::vector<TargetModel> out;
  for (const TargetSpec& t : targets) out.push_back(t.model);
  return out;
}

Belief Scenario::initial_belief() const {
  std::vector<Vec3> est;
  for (const TargetSpec& t : targets) est.push_back(t.xhat0);
  return Belief::make(0, est, initial_variance);
}

std::vector<Vec3> Scenario::initial_truth() const {
  std::vector<Vec3> out;
  for (const TargetSpec& t : targets) out.push_back(t.x0);
  return out;
}

const RobotSpec& Scenario::robot(RobotId id) const {
  const auto it = std::find_if(robots.begin(), robots.end(), [&](const RobotSpec& r) { return r.id == id; });
  if (it == robots.end()) throw Error("unknown robot " + std::to_string(to_int(id)));
  return *it;
}

}  // namespace dse
