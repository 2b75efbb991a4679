#include "doctest.h"

#include "dse/connectivity.hpp"
#include "dse/planner.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace dse;

namespace {

PlanProblem small_problem(std::vector<PlanAgent> agents, Workspace ws = Workspace{}) {
  PlanProblem p;
  p.agents = std::move(agents);
  std::vector<TargetModel> models(2);
  models[0].origin = Vec3(3, 3, 1);
  models[1].origin = Vec3(7, 6, 1);
  models[0].Q = models[1].Q = 1e-3 * Eigen::Matrix3d::Identity();
  const std::vector<Vec3> x0{models[0].origin, models[1].origin};
  p.belief = Belief::make(0, x0, 0.25);
  p.models = models;
  p.workspace = std::move(ws);
  return p;
}

// Step-by-step reading of the time-matching steering rule.
JointState reference_steer(const JointState& from, const std::vector<Vec2>& toward, double eps, double u_max) {
  double s = eps;
  for (std::size_t a = 0; a < from.pos.size(); ++a) s = std::min(s, (toward[a] - from.pos[a]).norm());
  const long dts = static_cast<long>(std::ceil(s / u_max - 1e-9));
  const double speed = s / static_cast<double>(dts);
  long t0 = from.arrival[0];
  for (long t : from.arrival) t0 = std::min(t0, t);
  JointState out = from;
  for (std::size_t a = 0; a < from.pos.size(); ++a) {
    const long dtc = dts - (from.arrival[a] - t0);
    if (dtc <= 0) continue;
    const Vec2 dir = (toward[a] - from.pos[a]).normalized();
    out.pos[a] = from.pos[a] + speed * static_cast<double>(dtc) * dir;
    out.arrival[a] = from.arrival[a] + dtc;
  }
  return out;
}

}  // namespace

TEST_CASE("steering matches clocks") {
  PlannerParams params;  // epsilon 0.5, u_max 0.1

  SUBCASE("synchronized robots step the same length") {
    const JointState from{{Vec2(1, 1), Vec2(2, 2)}, {4, 4}};
    const auto v = steer(from, {Vec2(1, 3), Vec2(2, 1.7)}, params);
    REQUIRE(v);
    CHECK((v->pos[0] - Vec2(1, 1.3)).norm() < 1e-12);
    CHECK((v->pos[1] - Vec2(2, 1.7)).norm() < 1e-12);
    CHECK(v->arrival == std::vector<TimeStep>{7, 7});
  }
  SUBCASE("arrivals (10, 12) with three steps") {
    const JointState from{{Vec2(0, 0), Vec2(5, 5)}, {10, 12}};
    const std::vector<Vec2> toward{Vec2(0.3, 0), Vec2(5, 6)};
    const auto v = steer(from, toward, params);
    REQUIRE(v);
    CHECK((v->pos[0] - Vec2(0.3, 0)).norm() < 1e-12);
    CHECK((v->pos[1] - Vec2(5, 5.1)).norm() < 1e-12);
    CHECK(v->arrival == std::vector<TimeStep>{13, 13});
    const JointState ref = reference_steer(from, toward, params.epsilon, params.u_max);
    CHECK(ref.arrival == v->arrival);
  }
  SUBCASE("arrivals (10, 14) with three steps") {
    const JointState from{{Vec2(0, 0), Vec2(5, 5)}, {10, 14}};
    const auto v = steer(from, {Vec2(0.3, 0), Vec2(5, 6)}, params);
    REQUIRE(v);
    CHECK((v->pos[1] - Vec2(5, 5)).norm() == 0.0);
    CHECK(v->arrival == std::vector<TimeStep>{13, 14});
  }
  SUBCASE("zero step") {
    const JointState from{{Vec2(0, 0)}, {0}};
    CHECK_FALSE(steer(from, {Vec2(0, 0)}, params).has_value());
  }
  SUBCASE("random steps agree with the reference and never grow the delay") {
    Rng rng(31);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<int> t(0, 8);
    for (int trial = 0; trial < 500; ++trial) {
      JointState from{{Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng))}, {t(rng), t(rng), t(rng)}};
      const std::vector<Vec2> toward{Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng))};
      const auto v = steer(from, toward, params);
      REQUIRE(v);
      const JointState ref = reference_steer(from, toward, params.epsilon, params.u_max);
      CHECK(v->arrival == ref.arrival);
      for (std::size_t a = 0; a < 3; ++a) {
        CHECK((v->pos[a] - ref.pos[a]).norm() < 1e-12);
        CHECK((v->pos[a] - from.pos[a]).norm() <=
              params.u_max * static_cast<double>(v->arrival[a] - from.arrival[a]) + 1e-12);
      }
      const auto span = [](const std::vector<TimeStep>& a) {
        return *std::max_element(a.begin(), a.end()) - *std::min_element(a.begin(), a.end());
      };
      CHECK(span(v->arrival) <= span(from.arrival));
    }
  }
}

TEST_CASE("goal membership") {
  const std::vector<Vec3> x0{Vec3(0, 0, 1)};
  const Belief b = Belief::make(0, x0, 0.01);
  CHECK(goal_membership({{Vec2(1, 1), Vec2(1.15, 1)}, {5, 5}}, b, 0.2, 0, 0.0144));
  CHECK(algebraic_connectivity(std::vector<Vec2>{Vec2(1, 1), Vec2(1.15, 1)}, 0.2) == doctest::Approx(2.0));
  CHECK_FALSE(goal_membership({{Vec2(1, 1), Vec2(1.25, 1)}, {5, 5}}, b, 0.2, 0, 0.0144));
  CHECK_FALSE(goal_membership({{Vec2(1, 1), Vec2(1.15, 1)}, {5, 6}}, b, 0.2, 0, 0.0144));
  const Belief loose = Belief::make(0, x0, 0.25);
  CHECK_FALSE(goal_membership({{Vec2(1, 1), Vec2(1.15, 1)}, {5, 5}}, loose, 0.2, 0, 0.0144));
  CHECK(goal_membership({{Vec2(1, 1), Vec2(1.15, 1)}, {5, 5}}, loose, 0.2, std::nullopt, 0.0144));
}

TEST_CASE("joint sampling") {
  PlannerParams params;
  params.n_sample = 100;
  Workspace ws;
  Rng rng(2);
  for (int iter = 1; iter <= params.explore_count(); ++iter)
    for (const Vec2& p : sample_joint(iter, rng, params, ws, 3)) CHECK(ws.bounds.contains(p));

  // Second phase: agents scatter around a common point with std 2R. The
  // difference of two agents has variance 2 (2R)^2 per axis; a large
  // workspace keeps boundary resampling negligible.
  Workspace big;
  big.bounds.xmax = big.bounds.ymax = 200.0;
  const int n = 100000;
  double sx = 0.0, sy = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto v = sample_joint(params.n_sample, rng, params, big, 2);
    sx += (v[0].x() - v[1].x()) * (v[0].x() - v[1].x());
    sy += (v[0].y() - v[1].y()) * (v[0].y() - v[1].y());
  }
  const double std_x = std::sqrt(sx / n / 2.0), std_y = std::sqrt(sy / n / 2.0);
  CHECK(std::abs(std_x - 0.4) / 0.4 < 0.05);
  CHECK(std::abs(std_y - 0.4) / 0.4 < 0.05);

  Rng a(5), b(5);
  for (int iter = 1; iter <= 100; ++iter) CHECK(sample_joint(iter, a, params, ws, 2) == sample_joint(iter, b, params, ws, 2));
}

TEST_CASE("planner parameters") {
  PlannerParams p;
  CHECK(p.explore_count() == 180);
  CHECK(p.delta == doctest::Approx(0.12 * 0.12));
  CHECK_NOTHROW(p.validate());
  p.u_max = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("extend picks the cheapest admissible parent") {
  Planner planner(small_problem({{Vec2(2, 2), 0, {Vec2::Zero()}}, {Vec2(2.5, 2), 0, {Vec2::Zero()}}}), PlannerParams{}, 7);
  for (int i = 0; i < 150; ++i) planner.iterate();

  SUBCASE("no near nodes") {
    const JointState v{{Vec2(2.1, 2.0), Vec2(2.6, 2.0)}, {1, 1}};
    const auto idx = planner.extend(v, 0, {});
    REQUIRE(idx);
    CHECK(planner.nodes()[*idx].parent == 0);
  }
  SUBCASE("argmin over candidates") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    int checked = 0;
    for (int trial = 0; trial < 200 && checked < 20; ++trial) {
      const std::vector<Vec2> target{Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng))};
      const std::size_t nearest = planner.nearest(target);
      const auto v = steer({planner.nodes()[nearest].pos, planner.nodes()[nearest].arrival}, target, planner.params());
      if (!v) continue;
      const auto near = planner.near(v->pos);
      double best = std::numeric_limits<double>::infinity();
      std::vector<std::size_t> candidates{nearest};
      candidates.insert(candidates.end(), near.begin(), near.end());
      for (std::size_t c : candidates)
        if (planner.edge_collision_free(planner.nodes()[c].pos, v->pos) && planner.time_consistent(c, *v))
          best = std::min(best, planner.edge_cost(c, *v).cost);
      const auto idx = planner.extend(*v, nearest, near);
      if (!idx) continue;
      CHECK(planner.nodes()[*idx].cost == best);
      ++checked;
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("tree invariants") {
  Workspace ws;
  ws.obstacles.push_back({Vec2(5, 2), Vec2(5, 8)});
  Planner planner(small_problem({{Vec2(2, 2), 3, {Vec2::Zero()}}, {Vec2(3, 4), 0, {Vec2::Zero()}},
                                 {Vec2(2.5, 5), 1, {Vec2::Zero()}}},
                                ws),
                  PlannerParams{}, 11);
  for (int i = 0; i < 600; ++i) planner.iterate();
  const auto& nodes = planner.nodes();
  REQUIRE(nodes.size() > 50);
  CHECK(nodes[0].arrival == std::vector<TimeStep>{3, 0, 1});
  for (std::size_t v = 1; v < nodes.size(); ++v) {
    const PlanNode& n = nodes[v];
    const PlanNode& p = nodes[n.parent];
    CHECK(n.delay() <= p.delay());
    CHECK(n.cost >= p.cost);
    CHECK(planner.edge_collision_free(p.pos, n.pos));
    CHECK(planner.time_consistent(n.parent, JointState{n.pos, n.arrival}));
    CHECK(std::find(p.children.begin(), p.children.end(), v) != p.children.end());
    CHECK(n.belief.t == n.t_min());
  }
  for (std::size_t g : planner.goal_nodes()) {
    CHECK(nodes[g].delay() == 0);
    CHECK(algebraic_connectivity(nodes[g].pos, ws.comm_range) > 1e-9);
  }
}

TEST_CASE("rewire never touches unsynchronized nodes") {
  Planner planner(small_problem({{Vec2(2, 2), 0, {Vec2::Zero()}}, {Vec2(2.5, 2), 6, {Vec2::Zero()}}}), PlannerParams{}, 3);
  for (int i = 0; i < 300; ++i) planner.iterate();
  std::vector<std::size_t> parents;
  std::vector<std::size_t> unsynced;
  for (std::size_t v = 1; v < planner.nodes().size(); ++v) {
    parents.push_back(planner.nodes()[v].parent);
    if (planner.nodes()[v].delay() > 0) unsynced.push_back(v);
  }
  REQUIRE_FALSE(unsynced.empty());
  for (std::size_t v = 1; v < planner.nodes().size(); ++v) {
    (void)planner.rewire(v, unsynced);
  }
  for (std::size_t k = 0; k < unsynced.size(); ++k)
    CHECK(planner.nodes()[unsynced[k]].parent == parents[unsynced[k] - 1]);
}

TEST_CASE("near radius") {
  PlannerParams params;
  Planner planner(small_problem({{Vec2(2, 2), 0, {Vec2::Zero()}}, {Vec2(2.5, 2), 0, {Vec2::Zero()}}}), params, 1);
  CHECK(planner.near_radius() == doctest::Approx(4.0 * params.epsilon));
  for (int i = 0; i < 400; ++i) planner.iterate();
  const double n = static_cast<double>(planner.nodes().size() + 1);  // counting the node about to be added
  CHECK(planner.near_radius() ==
        doctest::Approx(std::min(params.gamma * std::pow(std::log(n) / n, 1.0 / 4.0), 4.0 * params.epsilon)));
}

TEST_CASE("plan result") {
  const PlanProblem problem = small_problem({{Vec2(2, 2), 0, {Vec2::Zero()}}, {Vec2(3, 2), 2, {Vec2::Zero()}}});
  PlannerParams params;
  params.n_sample = 400;
  Planner a(problem, params, 21), b(problem, params, 21);
  const PlanResult ra = a.plan(), rb = b.plan();
  CHECK(ra.t_final == rb.t_final);
  CHECK(ra.cost == rb.cost);
  CHECK(a.nodes().size() == b.nodes().size());
  std::ostringstream da, db;
  a.dump(da);
  b.dump(db);
  CHECK(da.str() == db.str());

  const JointState& end = ra.joint_path.back();
  CHECK(goal_membership(end, ra.belief, problem.workspace.comm_range, ra.constraint_target, params.delta));
  CHECK(ra.joint_path.front().pos == a.nodes()[0].pos);
  // Replaying each agent's per-step waypoints reproduces the joint endpoint
  // and matches position_at along the tree path.
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& w = ra.waypoints[k];
    REQUIRE(static_cast<TimeStep>(w.size()) == ra.t_final - problem.agents[k].start_time + 1);
    CHECK((w.back() - end.pos[k]).norm() < 1e-12);
    for (std::size_t s = 0; s < w.size(); ++s) {
      const auto q = a.position_at(ra.goal, k, problem.agents[k].start_time + static_cast<TimeStep>(s));
      REQUIRE(q);
      CHECK((*q - w[s]).norm() < 1e-12);
    }
  }
  CHECK_FALSE(a.position_at(ra.goal, 1, 1).has_value());
}

TEST_CASE("separated agents cannot meet") {
  Workspace ws;
  ws.obstacles.push_back({Vec2(5, 0), Vec2(5, 10)});
  PlannerParams params;
  params.n_sample = 100;
  Planner planner(small_problem({{Vec2(2, 2), 0, {Vec2::Zero()}}, {Vec2(8, 2), 0, {Vec2::Zero()}}}, ws), params, 5);
  CHECK_THROWS_AS(planner.plan(), NoGoalFound);
}

TEST_CASE("target order follows root uncertainty") {
  PlanProblem p = small_problem({{Vec2(2, 2), 0, {Vec2::Zero()}}, {Vec2(2.5, 2), 0, {Vec2::Zero()}}});
  p.belief.cov(3, 3) = 0.5;
  Planner planner(p, PlannerParams{}, 1);
  CHECK(planner.target_order() == std::vector<std::size_t>{1, 0});
  // Equal uncertainties: the nearer target comes first.
  Planner tie(small_problem({{Vec2(8, 6), 0, {Vec2::Zero()}}, {Vec2(8.5, 6), 0, {Vec2::Zero()}}}), PlannerParams{}, 1);
  CHECK(tie.target_order() == std::vector<std::size_t>{1, 0});
}
