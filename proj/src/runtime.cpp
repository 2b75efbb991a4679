#include "dse/runtime.hpp"

#include "dse/baselines.hpp"
#include "dse/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

namespace dse {

std::size_t RecordStore::add(const MeasurementRecord& r) {
  if (!records_.empty() && r.key() <= records_.back().key()) throw Error("records must be added in key order");
  records_.push_back(r);
  return records_.size() - 1;
}

std::vector<MeasurementRecord> RecordStore::gather(const std::vector<std::size_t>& indices) const {
  std::vector<MeasurementRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(records_.at(i));
  return out;
}

std::vector<std::size_t> exchange(const std::vector<RobotLog*>& members, const RecordStore& store) {
  std::vector<std::size_t> merged;
  for (const RobotLog* m : members) {
    std::vector<std::size_t> next;
    next.reserve(merged.size() + m->owned.size());
    std::set_union(merged.begin(), merged.end(), m->owned.begin(), m->owned.end(), std::back_inserter(next));
    merged = std::move(next);
  }
  for (RobotLog* m : members) {
    std::vector<std::size_t> fresh;
    std::set_difference(merged.begin(), merged.end(), m->owned.begin(), m->owned.end(), std::back_inserter(fresh));
    if (!fresh.empty()) {
      TimeStep oldest = store.at(fresh.front()).t;
      for (std::size_t i : fresh) oldest = std::min(oldest, store.at(i).t);
      m->checkpoints.erase(m->checkpoints.lower_bound(oldest), m->checkpoints.end());
    }
    m->owned = merged;
  }
  return merged;
}

Belief refilter(const std::vector<MeasurementRecord>& records, const std::vector<const RobotLog*>& members,
                const Belief& initial, TimeStep t, std::span<const TargetModel> models, const SensorModel& sensor) {
  const Belief* start = &initial;
  for (const RobotLog* m : members) {
    auto it = m->checkpoints.upper_bound(t);
    if (it == m->checkpoints.begin()) continue;
    --it;
    if (it->second.t > start->t) start = &it->second;
  }
  return filter_forward(*start, t, records, models, sensor);
}

Belief global_oracle(std::span<const MeasurementRecord> records, const Belief& initial, TimeStep t,
                     std::span<const TargetModel> models, const SensorModel& sensor) {
  std::vector<MeasurementRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  return filter_forward(initial, t, sorted, models, sensor);
}

Summary summarize(const SimulationLog& log) {
  Summary s;
  if (log.t_end <= 0) return s;
  const std::size_t n = std::min<std::size_t>(log.e_loc.size(), static_cast<std::size_t>(log.t_end) + 1);
  for (std::size_t t = 0; t < n; ++t) {
    s.mean_e_loc += log.e_loc[t];
    s.mean_lambda += log.lambda[t];
  }
  s.mean_e_loc /= static_cast<double>(log.t_end);
  s.mean_lambda /= static_cast<double>(log.t_end);
  return s;
}

std::vector<Vec2> line_formation(const Vec2& center, std::size_t count, double spacing, double angle) {
  const Vec2 dir(std::cos(angle), std::sin(angle));
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(center + dir * (spacing * (static_cast<double>(k) - 0.5 * static_cast<double>(count - 1))));
  return out;
}

MeetingPlan geodesic_meeting(const MeetingRequest& req, const std::vector<Vec2>& goals, const Workspace& ws,
                             double u_max) {
  std::vector<Polyline> paths;
  MeetingPlan plan;
  for (std::size_t m = 0; m < goals.size(); ++m) {
    paths.push_back(geodesic(req.root_positions[m], goals[m], ws));
    const auto steps = static_cast<TimeStep>(std::ceil(paths.back().length() / u_max - 1e-9));
    plan.arrivals.push_back(req.root_times[m] + steps);
  }
  plan.t_final = *std::max_element(plan.arrivals.begin(), plan.arrivals.end());
  for (std::size_t m = 0; m < goals.size(); ++m) {
    std::vector<Vec2> pts;
    const double len = paths[m].length();
    for (TimeStep t = req.root_times[m]; t <= plan.t_final; ++t) {
      const double s = static_cast<double>(t - req.root_times[m]) * u_max;
      pts.push_back(s >= len ? goals[m] : point_along(paths[m], s));
    }
    plan.waypoints.push_back(std::move(pts));
  }
  plan.status = "geodesic";
  return plan;
}

namespace {

struct PlannedEvent {
  std::vector<RobotId> members;
  TimeStep t = 0;
  std::vector<TimeStep> arrivals;
};

std::string robot_name(RobotId r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace

SimulationLog run_teams(const Scenario& scenario, std::uint64_t seed, const std::string& strategy,
                        const MeetingPlanner& planner) {
  const TeamGraph graph = scenario.build_team_graph();
  const Schedule sched = scenario.build_schedule(graph);
  const int period = sched.period();
  const std::vector<TargetModel> models = scenario.models();
  const SensorModel& sensor = scenario.sensor;
  const Workspace& ws = scenario.workspace;
  const Belief initial = scenario.initial_belief();
  const TimeStep t_end = scenario.t_end;

  SimulationLog log;
  log.strategy = strategy;
  log.seed = seed;
  log.t_end = t_end;
  log.period = period;
  log.delay_bound = delay_bound(graph, period);

  Rng target_rng = make_rng(seed, 1);
  Rng sense_rng = make_rng(seed, 2);
  Rng init_rng = make_rng(seed, 3);

  WorldState world{0, scenario.initial_truth(), {}};
  std::map<RobotId, RobotLog> logs;
  for (const RobotSpec& r : scenario.active_robots()) {
    world.robots[r.id] = r.start;
    log.tracks[r.id] = {r.start};
    logs[r.id].robot = r.id;
    log.epoch_end[r.id] = {};
  }

  std::map<std::pair<TeamIndex, long>, PlannedEvent> planned;
  std::set<std::tuple<TimeStep, long, TeamIndex>> queue;

  auto assign = [&](TeamIndex team, long epoch, const std::vector<RobotId>& members, const MeetingPlan& plan) {
    PlannedEvent ev{members, plan.t_final, plan.arrivals};
    for (std::size_t m = 0; m < members.size(); ++m) {
      auto& track = log.tracks[members[m]];
      const auto& pts = plan.waypoints[m];
      if (pts.empty() || static_cast<TimeStep>(track.size()) - 1 + static_cast<TimeStep>(pts.size()) - 1 != plan.t_final)
        throw Error("meeting plan for T" + std::to_string(team + 1) + " does not continue the track of " +
                    robot_name(members[m]));
      track.insert(track.end(), pts.begin() + 1, pts.end());
    }
    planned[{team, epoch}] = std::move(ev);
    queue.emplace(plan.t_final, epoch, team);
  };

  auto request_for = [&](TeamIndex team, long epoch, const std::vector<RobotId>& members) {
    MeetingRequest req;
    req.team = team;
    req.epoch = epoch;
    req.members = members;
    for (RobotId r : members) {
      const auto& track = log.tracks[r];
      req.root_positions.push_back(track.back());
      req.root_times.push_back(static_cast<TimeStep>(track.size()) - 1);
    }
    return req;
  };

  // A-priori paths for the first period: each team meets on a short line
  // through the centroid of its members' start positions.
  {
    std::vector<TeamIndex> order(graph.team_count());
    for (TeamIndex i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](TeamIndex a, TeamIndex b) { return sched.slot(a) < sched.slot(b); });
    for (TeamIndex team : order) {
      const auto& members = graph.members(team);
      MeetingRequest req = request_for(team, sched.slot(team), members);
      req.belief = initial;
      Vec2 center = Vec2::Zero();
      for (RobotId r : members) center += scenario.robot(r).start;
      center /= static_cast<double>(members.size());
      std::optional<MeetingPlan> plan;
      for (int attempt = 0; attempt <= 100 && !plan; ++attempt) {
        if (attempt > 0) center = sample_free_point(ws, init_rng);
        const auto goals = line_formation(center, members.size(), 0.5 * ws.comm_range, 0.0);
        if (!std::all_of(goals.begin(), goals.end(), [&](const Vec2& g) { return ws.is_free(g); })) continue;
        try {
          plan = geodesic_meeting(req, goals, ws, scenario.planner.u_max);
        } catch (const NoPath&) {
        }
      }
      if (!plan) throw Error("no initial meeting point found for T" + std::to_string(team + 1));
      assign(team, sched.slot(team), members, *plan);
    }
  }

  std::vector<Belief> global{initial};
  log.truth.push_back(world.targets);
  auto record_metrics = [&]() {
    const Belief& g = global.back();
    Eigen::VectorXd truth(g.xhat.size());
    for (std::size_t a = 0; a < world.targets.size(); ++a) truth.segment<3>(3 * static_cast<Eigen::Index>(a)) = world.targets[a];
    log.global_xhat.push_back(g.xhat);
    log.e_loc.push_back((g.xhat - truth).norm());
    log.lambda.push_back(uncertainty(g));
  };
  record_metrics();

  RecordStore store;

  auto handle_event = [&](TeamIndex team, long epoch, TimeStep t) {
    const PlannedEvent ev = planned.at({team, epoch});
    TeamEventLog entry;
    entry.team = team;
    entry.epoch = epoch;
    entry.t = t;
    entry.members = ev.members;
    entry.arrivals = ev.arrivals;
    for (RobotId r : ev.members) {
      entry.positions.push_back(log.tracks[r][static_cast<std::size_t>(t)]);
      auto& ends = log.epoch_end[r];
      const TimeStep prev = ends.empty() ? 0 : ends.back();
      while (static_cast<long>(ends.size()) < epoch - 1) ends.push_back(prev);
      ends.push_back(t);
    }

    std::vector<RobotLog*> members;
    for (RobotId r : ev.members) members.push_back(&logs[r]);
    const std::vector<std::size_t> merged = dse::exchange(members, store);
    const std::vector<MeasurementRecord> records = store.gather(merged);
    const Belief team_belief =
        refilter(records, std::vector<const RobotLog*>(members.begin(), members.end()), initial, t, models, sensor);
    for (RobotLog* m : members) m->checkpoints[t] = team_belief;
    entry.fused = merged.size();
    entry.lambda = uncertainty(team_belief);

    // Staleness against the network estimate.
    std::size_t first_missing = store.size();
    {
      std::size_t k = 0;
      for (std::size_t i = 0; i < store.size(); ++i) {
        if (k < merged.size() && merged[k] == i) {
          ++k;
          continue;
        }
        if (first_missing == store.size()) first_missing = i;
        entry.missing.push_back(store.at(i).key());
      }
    }
    entry.t_star = t;
    if (first_missing < store.size()) {
      const TimeStep t0 = store.at(first_missing).t;
      Belief b = global[static_cast<std::size_t>(t0 - 1)];
      std::vector<double> diffs;
      std::optional<TimeStep> diverged;
      for (TimeStep tau = t0; tau <= t; ++tau) {
        b = filter_forward(b, tau, records, models, sensor);
        const Eigen::VectorXd d = global[static_cast<std::size_t>(tau)].xhat - b.xhat;
        if (!diverged && d.cwiseAbs().maxCoeff() > 1e-9) diverged = tau;
        diffs.push_back(d.norm());
      }
      if (diverged) {
        entry.t_star = *diverged;
        double sum = 0.0;
        for (TimeStep tau = *diverged; tau <= t; ++tau) sum += diffs[static_cast<std::size_t>(tau - t0)];
        entry.e_d = *diverged == t ? 0.0 : sum / static_cast<double>(t - *diverged);
      }
    }

    // Plan this team's next meeting, one period ahead.
    const long next = epoch + period;
    entry.next_time = -1;
    if (t < t_end) {
      MeetingRequest req;
      req.team = team;
      req.epoch = next;
      req.members = ev.members;
      bool ready = true;
      for (RobotId r : ev.members) {
        const TeamIndex other = graph.other_team(r, team);
        const long k_other = sched.next_epoch(other, epoch);
        const auto it = planned.find({other, k_other});
        if (it == planned.end()) {
          ready = false;
          break;
        }
        req.root_positions.push_back(log.tracks[r].back());
        req.root_times.push_back(it->second.t);
      }
      const TimeStep first_root = ready ? *std::min_element(req.root_times.begin(), req.root_times.end()) : t_end;
      if (ready && first_root < t_end) {
        req.belief = team_belief;
        const MeetingPlan plan = planner(req);
        entry.plan_status = plan.status;
        entry.plan_cost = plan.cost;
        entry.plan_nodes = plan.nodes;
        entry.next_time = plan.t_final;
        if (plan.status == "fallback")
          log.diagnostics.push_back("T" + std::to_string(team + 1) + " epoch " + std::to_string(next) +
                                    ": planner found no goal, used geodesic fallback");
        assign(team, next, ev.members, plan);
      } else {
        entry.plan_status = "beyond horizon";
      }
    }
    log.events.push_back(std::move(entry));
  };

  for (TimeStep t = 1; t <= t_end; ++t) {
    world = step_targets(world, models, ws, target_rng);
    for (auto& [id, pos] : world.robots) {
      const auto& track = log.tracks[id];
      pos = track[std::min(static_cast<std::size_t>(t), track.size() - 1)];
    }
    const std::size_t first_new = store.size();
    if (t % scenario.measurement_period == 0)
      for (const auto& [id, pos] : world.robots)
        for (const MeasurementRecord& rec : sense(world, id, sensor, ws, sense_rng))
          logs[id].owned.push_back(store.add(rec));

    Belief g = predict(global.back(), models, t);
    if (store.size() > first_new) {
      try {
        g = update(g, std::span(store.all()).subspan(first_new), sensor);
      } catch (const SingularInnovation&) {
      }
    }
    global.push_back(std::move(g));
    log.truth.push_back(world.targets);
    record_metrics();

    while (!queue.empty() && std::get<0>(*queue.begin()) <= t) {
      const auto [when, epoch, team] = *queue.begin();
      queue.erase(queue.begin());
      if (when < t) throw Error("meeting scheduled in the past");
      handle_event(team, epoch, t);
    }
  }

  for (auto& [id, track] : log.tracks) track.resize(static_cast<std::size_t>(t_end) + 1, track.back());
  log.records = store.all();
  return log;
}

SimulationLog run_intermittent(const Scenario& scenario, std::uint64_t seed) {
  const std::vector<TargetModel> models = scenario.models();
  const Workspace& ws = scenario.workspace;
  auto plan_meeting = [&](const MeetingRequest& req) {
    PlanProblem problem;
    for (std::size_t m = 0; m < req.members.size(); ++m)
      problem.agents.push_back(PlanAgent{req.root_positions[m], req.root_times[m], {Vec2::Zero()}});
    const TimeStep t0 = *std::min_element(req.root_times.begin(), req.root_times.end());
    problem.belief = predict(req.belief, models, t0);
    problem.workspace = ws;
    problem.models = models;
    problem.sensor = scenario.sensor;
    problem.measure_period = scenario.measurement_period;
    const std::uint64_t stream = 1000 + 1000003ULL * (req.team + 1) + static_cast<std::uint64_t>(req.epoch);
    Planner planner(std::move(problem), scenario.planner, derive_seed(seed, stream));
    try {
      const PlanResult res = planner.plan();
      MeetingPlan plan;
      plan.t_final = res.t_final;
      plan.waypoints = res.waypoints;
      plan.arrivals.assign(req.members.size(), res.t_final);
      plan.status = res.constraint_target ? "target " + std::to_string(*res.constraint_target + 1) : "relaxed";
      plan.cost = res.cost;
      plan.nodes = res.tree_size;
      return plan;
    } catch (const NoGoalFound&) {
      Vec2 center = Vec2::Zero();
      for (const Vec2& p : req.root_positions) center += p;
      center /= static_cast<double>(req.root_positions.size());
      Rng rng(derive_seed(seed, stream + 7));
      for (int attempt = 0; attempt <= 100; ++attempt) {
        if (attempt > 0) center = sample_free_point(ws, rng);
        const auto goals = line_formation(center, req.members.size(), 0.5 * ws.comm_range, 0.0);
        if (!std::all_of(goals.begin(), goals.end(), [&](const Vec2& g) { return ws.is_free(g); })) continue;
        try {
          MeetingPlan plan = geodesic_meeting(req, goals, ws, scenario.planner.u_max);
          plan.status = "fallback";
          return plan;
        } catch (const NoPath&) {
        }
      }
      throw;
    }
  };
  return run_teams(scenario, seed, "intermittent", plan_meeting);
}

SimulationLog run(const Scenario& scenario, std::uint64_t seed, const std::string& strategy) {
  if (strategy == "intermittent") return run_intermittent(scenario, seed);
  if (strategy == "heuristic") return run_heuristic(scenario, seed);
  if (strategy == "all-time") return run_all_time(scenario, seed);
  throw Error("unknown strategy '" + strategy + "'");
}

}  // namespace dse
