#include "dse/baselines.hpp"

#include "dse/connectivity.hpp"

#include <algorithm>
#include <numbers>

namespace dse {

FormationSpec FormationSpec::chain(std::size_t count, double spacing) {
  return FormationSpec{line_formation(Vec2::Zero(), count, spacing, 0.0)};
}

double FormationSpec::connectivity(double comm_range) const { return algebraic_connectivity(offsets, comm_range); }

namespace {

bool formation_free(const Vec2& center, const FormationSpec& f, const Workspace& ws) {
  return std::all_of(f.offsets.begin(), f.offsets.end(), [&](const Vec2& o) { return ws.is_free(center + o); });
}

}  // namespace

SimulationLog run_all_time(const Scenario& scenario, std::uint64_t seed) {
  const std::vector<TargetModel> models = scenario.models();
  const SensorModel& sensor = scenario.sensor;
  const Workspace& ws = scenario.workspace;
  const Belief initial = scenario.initial_belief();
  const TimeStep t_end = scenario.t_end;

  std::vector<RobotId> ids;
  for (const RobotSpec& r : scenario.active_robots()) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  const FormationSpec formation = FormationSpec::chain(ids.size(), scenario.formation_spacing * ws.comm_range);
  if (ids.size() > 1 && !(formation.connectivity(ws.comm_range) > 1e-9)) throw Error("formation is not connected");

  SimulationLog log;
  log.strategy = "all-time";
  log.seed = seed;
  log.t_end = t_end;
  log.period = 1;
  log.delay_bound = 0;

  Rng target_rng = make_rng(seed, 1);
  Rng sense_rng = make_rng(seed, 2);
  Rng init_rng = make_rng(seed, 3);

  Vec2 center = Vec2::Zero();
  for (const RobotSpec& r : scenario.active_robots()) center += r.start;
  center /= static_cast<double>(ids.size());
  for (int attempt = 0; !formation_free(center, formation, ws); ++attempt) {
    if (attempt == 1000) throw Error("no free position for the formation");
    center = sample_free_point(ws, init_rng);
  }
  std::vector<Vec2> center_track{center};

  WorldState world{0, scenario.initial_truth(), {}};
  for (std::size_t k = 0; k < ids.size(); ++k) {
    world.robots[ids[k]] = center + formation.offsets[k];
    log.tracks[ids[k]] = {world.robots[ids[k]]};
  }

  Belief global = initial;
  auto record_metrics = [&]() {
    Eigen::VectorXd truth(global.xhat.size());
    for (std::size_t a = 0; a < world.targets.size(); ++a) truth.segment<3>(3 * static_cast<Eigen::Index>(a)) = world.targets[a];
    log.truth.push_back(world.targets);
    log.global_xhat.push_back(global.xhat);
    log.e_loc.push_back((global.xhat - truth).norm());
    log.lambda.push_back(uncertainty(global));
  };
  record_metrics();

  // Returns the logged plan status: the goal target, or why there is none.
  auto replan = [&](TimeStep t) -> std::string {
    std::string status = "hold";
    PlanProblem problem;
    problem.agents.push_back(PlanAgent{center_track.back(), t, formation.offsets});
    problem.belief = global;
    problem.workspace = ws;
    problem.models = models;
    problem.sensor = sensor;
    problem.measure_period = scenario.measurement_period;
    Planner planner(std::move(problem), scenario.planner, derive_seed(seed, 1000 + static_cast<std::uint64_t>(t)));
    try {
      const PlanResult res = planner.plan();
      center_track.insert(center_track.end(), res.waypoints[0].begin() + 1, res.waypoints[0].end());
      status = res.constraint_target ? "target " + std::to_string(*res.constraint_target + 1) : std::string("relaxed");
    } catch (const NoGoalFound&) {
      log.diagnostics.push_back("t=" + std::to_string(t) + ": no goal for the formation, holding position");
    }
    if (static_cast<TimeStep>(center_track.size()) - 1 <= t) center_track.push_back(center_track.back());
    return status;
  };
  replan(0);

  RecordStore store;
  for (TimeStep t = 1; t <= t_end; ++t) {
    world = step_targets(world, models, ws, target_rng);
    const Vec2 c = center_track[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < ids.size(); ++k) {
      world.robots[ids[k]] = c + formation.offsets[k];
      log.tracks[ids[k]].push_back(world.robots[ids[k]]);
    }
    const std::size_t first_new = store.size();
    if (t % scenario.measurement_period == 0)
      for (const auto& [id, pos] : world.robots)
        for (const MeasurementRecord& rec : sense(world, id, sensor, ws, sense_rng)) store.add(rec);
    global = predict(global, models, t);
    if (store.size() > first_new) {
      try {
        global = update(global, std::span(store.all()).subspan(first_new), sensor);
      } catch (const SingularInnovation&) {
      }
    }
    record_metrics();

    TeamEventLog entry;
    entry.team = 0;
    entry.epoch = t;
    entry.t = t;
    entry.members = ids;
    for (RobotId r : ids) {
      entry.positions.push_back(world.robots[r]);
      entry.arrivals.push_back(t);
    }
    entry.fused = store.size();
    entry.t_star = t;
    entry.lambda = uncertainty(global);
    entry.plan_status = "connected";
    if (static_cast<TimeStep>(center_track.size()) - 1 == t && t < t_end) {
      entry.plan_status = replan(t);
      entry.next_time = static_cast<TimeStep>(center_track.size()) - 1;
    }
    log.events.push_back(std::move(entry));
  }
  for (RobotId r : ids) log.epoch_end[r] = {};
  log.records = store.all();
  return log;
}

SimulationLog run_heuristic(const Scenario& scenario, std::uint64_t seed) {
  const Workspace& ws = scenario.workspace;
  auto plan_meeting = [&](const MeetingRequest& req) {
    const std::uint64_t stream = 1000 + 1000003ULL * (req.team + 1) + static_cast<std::uint64_t>(req.epoch);
    Rng rng(derive_seed(seed, stream));
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Vec2 q = sample_free_point(ws, rng);
      const auto goals = line_formation(q, req.members.size(), scenario.meeting_spacing * ws.comm_range, angle(rng));
      if (!std::all_of(goals.begin(), goals.end(), [&](const Vec2& g) { return ws.is_free(g); })) continue;
      try {
        MeetingPlan plan = geodesic_meeting(req, goals, ws, scenario.planner.u_max);
        plan.status = "random meeting";
        return plan;
      } catch (const NoPath&) {
      }
    }
    throw NoPath("no reachable random meeting point after 100 draws");
  };
  return run_teams(scenario, seed, "heuristic", plan_meeting);
}

}  // namespace dse
