#include "dse/planner.hpp"

#include "dse/connectivity.hpp"
#include "dse/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace dse {

namespace {

Vec2 interpolate(const Vec2& p0, TimeStep t0, const Vec2& p1, TimeStep t1, TimeStep t) {
  if (t1 <= t0 || t >= t1) return p1;
  if (t <= t0) return p0;
  return p0 + (p1 - p0) * (static_cast<double>(t - t0) / static_cast<double>(t1 - t0));
}

double joint_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]).squaredNorm();
  return std::sqrt(sum);
}

TimeStep steps_for(double distance, double u_max) {
  return static_cast<TimeStep>(std::ceil(distance / u_max - 1e-9));
}

}  // namespace

void PlannerParams::validate() const {
  if (n_sample < 1) throw Error("n_sample must be positive");
  if (explore_count() > n_sample) throw Error("exploration samples cannot exceed n_sample");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (!(delta > 0.0)) throw Error("delta must be positive");
  if (!(u_max > 0.0)) throw Error("u_max must be positive");
}

TimeStep PlanNode::t_min() const { return *std::min_element(arrival.begin(), arrival.end()); }
TimeStep PlanNode::t_max() const { return *std::max_element(arrival.begin(), arrival.end()); }

std::vector<Vec2> sample_joint(int iter, Rng& rng, const PlannerParams& params, const Workspace& ws,
                               std::size_t agents) {
  std::vector<Vec2> out;
  out.reserve(agents);
  if (iter <= params.explore_count()) {
    for (std::size_t a = 0; a < agents; ++a) out.push_back(sample_free_point(ws, rng));
    return out;
  }
  const Vec2 q = sample_free_point(ws, rng);
  std::normal_distribution<double> normal(0.0, 2.0 * ws.comm_range);
  const Bounds& bb = ws.bounds;
  for (std::size_t a = 0; a < agents; ++a) {
    double x, y;
    do x = q.x() + normal(rng);
    while (x < bb.xmin || x > bb.xmax);
    do y = q.y() + normal(rng);
    while (y < bb.ymin || y > bb.ymax);
    out.emplace_back(x, y);
  }
  return out;
}

std::optional<JointState> steer(const JointState& from, const std::vector<Vec2>& toward, const PlannerParams& params) {
  const std::size_t n = from.pos.size();
  double s = params.epsilon;
  for (std::size_t a = 0; a < n; ++a) s = std::min(s, (toward[a] - from.pos[a]).norm());
  if (s <= 0.0) return std::nullopt;
  // Time is discrete: the step takes a whole number of steps, at a speed
  // scaled down from u_max so that the slowest-clock robot covers exactly s.
  const TimeStep dts = std::max<TimeStep>(1, steps_for(s, params.u_max));
  const double speed = s / static_cast<double>(dts);
  const TimeStep t0 = *std::min_element(from.arrival.begin(), from.arrival.end());
  JointState out = from;
  for (std::size_t a = 0; a < n; ++a) {
    const TimeStep dtc = dts - (from.arrival[a] - t0);
    if (dtc <= 0) continue;
    const Vec2 d = toward[a] - from.pos[a];
    const double len = d.norm();
    if (len > 0.0) out.pos[a] = from.pos[a] + d * (std::min(speed * static_cast<double>(dtc), len) / len);
    out.arrival[a] = from.arrival[a] + dtc;
  }
  return out;
}

bool goal_membership(const JointState& v, const Belief& belief, double comm_range, std::optional<std::size_t> target,
                     double delta) {
  const auto [lo, hi] = std::minmax_element(v.arrival.begin(), v.arrival.end());
  if (*lo != *hi) return false;
  if (!disk_connected(v.pos, comm_range)) return false;
  return !target || block_uncertainty(belief, *target) <= delta;
}

Planner::Planner(PlanProblem problem, PlannerParams params, std::uint64_t seed)
    : problem_(std::move(problem)), params_(params), rng_(seed) {
  params_.validate();
  if (problem_.agents.empty()) throw Error("planner needs at least one agent");
  if (problem_.models.size() != problem_.belief.target_count()) throw Error("one target model per target is required");
  PlanNode root;
  for (const PlanAgent& a : problem_.agents) {
    if (a.offsets.empty()) throw Error("planner agent has no sensor offsets");
    for (const Vec2& o : a.offsets)
      if (!problem_.workspace.is_free(a.start + o)) throw Error("planner start configuration is not in free space");
    root.pos.push_back(a.start);
    root.arrival.push_back(a.start_time);
  }
  const TimeStep t0 = root.t_min();
  if (problem_.belief.t > t0) throw Error("planner belief is newer than the earliest start time");
  root.belief = predict(problem_.belief, problem_.models, t0);
  root.connected = disk_connected(root.pos, problem_.workspace.comm_range);
  nodes_.push_back(std::move(root));

  order_.resize(problem_.belief.target_count());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  // Equal uncertainties (common right after initialization) go to the
  // nearest target first, so teams sharing a prior spread out.
  Vec2 centroid = Vec2::Zero();
  for (const PlanAgent& a : problem_.agents) centroid += a.start;
  centroid /= static_cast<double>(problem_.agents.size());
  std::vector<std::pair<long long, double>> key(order_.size());
  for (std::size_t a = 0; a < key.size(); ++a)
    key[a] = {-std::llround(block_uncertainty(nodes_[0].belief, a) * 1e9),
              (problem_.belief.position(a).head<2>() - centroid).norm()};
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
}

bool Planner::in_goal_set(std::size_t node, std::optional<std::size_t> target) const {
  if (node == 0) return false;
  const PlanNode& v = nodes_[node];
  if (!v.connected || v.delay() != 0) return false;
  return !target || block_uncertainty(v.belief, *target) <= params_.delta;
}

std::vector<std::size_t> Planner::goal_nodes() const {
  std::vector<std::size_t> out;
  const std::optional<std::size_t> target = order_.empty() ? std::nullopt : std::optional(order_.front());
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (in_goal_set(i, target)) out.push_back(i);
  return out;
}

std::size_t Planner::nearest(const std::vector<Vec2>& point) const {
  std::size_t best = 0;
  double best_d = joint_distance(nodes_[0].pos, point);
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const double d = joint_distance(nodes_[i].pos, point);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double Planner::near_radius() const {
  const double n = static_cast<double>(nodes_.size() + 1);
  const double dim = 2.0 * static_cast<double>(problem_.agents.size());
  return std::min(params_.gamma * std::pow(std::log(n) / n, 1.0 / dim), 4.0 * params_.epsilon);
}

std::vector<std::size_t> Planner::near(const std::vector<Vec2>& point) const {
  const double r = near_radius();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (joint_distance(nodes_[i].pos, point) <= r) out.push_back(i);
  return out;
}

bool Planner::edge_collision_free(const std::vector<Vec2>& from, const std::vector<Vec2>& to) const {
  for (std::size_t a = 0; a < from.size(); ++a)
    for (const Vec2& o : problem_.agents[a].offsets)
      if (!collision_free(from[a] + o, to[a] + o, problem_.workspace)) return false;
  return true;
}

std::optional<Vec2> Planner::position_at(std::size_t node, std::size_t agent, TimeStep t) const {
  std::size_t cur = node;
  for (;;) {
    const PlanNode& n = nodes_[cur];
    if (n.parent == PlanNode::kNone) {
      if (t < n.arrival[agent]) return std::nullopt;
      return n.pos[agent];
    }
    const PlanNode& p = nodes_[n.parent];
    if (t >= p.arrival[agent]) return interpolate(p.pos[agent], p.arrival[agent], n.pos[agent], n.arrival[agent], t);
    cur = n.parent;
  }
}

std::optional<Vec2> Planner::position_on_edge(std::size_t parent, const JointState& child, std::size_t agent,
                                              TimeStep t) const {
  const PlanNode& p = nodes_[parent];
  if (t >= p.arrival[agent])
    return interpolate(p.pos[agent], p.arrival[agent], child.pos[agent], child.arrival[agent], t);
  return position_at(parent, agent, t);
}

CostIncrement Planner::edge_cost(std::size_t parent, const JointState& child) const {
  const PlanNode& p = nodes_[parent];
  const SensingScene scene{problem_.models, problem_.sensor, problem_.workspace.obstacles, problem_.measure_period};
  auto poses = [&](TimeStep t, std::vector<Vec2>& out) {
    for (std::size_t a = 0; a < child.pos.size(); ++a)
      if (const auto q = position_on_edge(parent, child, a, t))
        for (const Vec2& o : problem_.agents[a].offsets) out.push_back(*q + o);
  };
  const TimeStep until = *std::min_element(child.arrival.begin(), child.arrival.end());
  CostIncrement inc = path_cost(p.belief, until, scene, poses);
  inc.cost += p.cost;
  return inc;
}

bool Planner::time_consistent(std::size_t parent, const JointState& child) const {
  const PlanNode& p = nodes_[parent];
  const auto [lo, hi] = std::minmax_element(child.arrival.begin(), child.arrival.end());
  if (*hi - *lo > p.delay()) return false;
  for (std::size_t a = 0; a < child.pos.size(); ++a) {
    const TimeStep dt = child.arrival[a] - p.arrival[a];
    if (dt < 0) return false;
    if ((child.pos[a] - p.pos[a]).norm() > params_.u_max * static_cast<double>(dt) + 1e-9) return false;
  }
  return true;
}

std::optional<std::size_t> Planner::extend(const JointState& v_new, std::size_t nearest_node,
                                           const std::vector<std::size_t>& near_set) {
  std::vector<std::size_t> candidates{nearest_node};
  for (std::size_t c : near_set)
    if (c != nearest_node) candidates.push_back(c);
  std::erase_if(candidates, [&](std::size_t c) {
    return !time_consistent(c, v_new) || !edge_collision_free(nodes_[c].pos, v_new.pos);
  });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return nodes_[a].cost < nodes_[b].cost; });

  std::optional<std::size_t> best;
  CostIncrement best_inc;
  for (std::size_t c : candidates) {
    // Increments are non-negative, so no later candidate can beat the best.
    if (best && nodes_[c].cost >= best_inc.cost) break;
    CostIncrement inc = edge_cost(c, v_new);
    if (!best || inc.cost < best_inc.cost) {
      best = c;
      best_inc = std::move(inc);
    }
  }
  if (!best) return std::nullopt;

  PlanNode node;
  node.pos = v_new.pos;
  node.arrival = v_new.arrival;
  node.cost = best_inc.cost;
  node.parent = *best;
  node.belief = std::move(best_inc.belief);
  node.connected = disk_connected(node.pos, problem_.workspace.comm_range);
  const std::size_t index = nodes_.size();
  nodes_.push_back(std::move(node));
  nodes_[*best].children.push_back(index);
  return index;
}

void Planner::refresh(std::size_t node) {
  PlanNode& n = nodes_[node];
  CostIncrement inc = edge_cost(n.parent, JointState{n.pos, n.arrival});
  n.cost = inc.cost;
  n.belief = std::move(inc.belief);
}

int Planner::rewire(std::size_t v_new, const std::vector<std::size_t>& near_set) {
  std::set<std::size_t> ancestors;
  for (std::size_t a = v_new; a != PlanNode::kNone; a = nodes_[a].parent) ancestors.insert(a);

  int count = 0;
  for (std::size_t w : near_set) {
    if (w == 0 || ancestors.contains(w)) continue;
    if (nodes_[w].delay() != 0) continue;
    if (!edge_collision_free(nodes_[v_new].pos, nodes_[w].pos)) continue;

    const PlanNode& v = nodes_[v_new];
    TimeStep t_new = 0;
    for (std::size_t a = 0; a < v.pos.size(); ++a)
      t_new = std::max(t_new, v.arrival[a] + steps_for((nodes_[w].pos[a] - v.pos[a]).norm(), params_.u_max));
    const JointState moved{nodes_[w].pos, std::vector<TimeStep>(v.pos.size(), t_new)};
    CostIncrement inc = edge_cost(v_new, moved);
    if (!(inc.cost < nodes_[w].cost)) continue;

    PlanNode& node = nodes_[w];
    std::erase(nodes_[node.parent].children, w);
    nodes_[v_new].children.push_back(w);
    const TimeStep shift = t_new - node.arrival.front();
    node.parent = v_new;
    node.arrival = moved.arrival;
    node.cost = inc.cost;
    node.belief = std::move(inc.belief);
    ++count;

    std::deque<std::size_t> queue(nodes_[w].children.begin(), nodes_[w].children.end());
    while (!queue.empty()) {
      const std::size_t d = queue.front();
      queue.pop_front();
      for (TimeStep& t : nodes_[d].arrival) t += shift;
      refresh(d);
      queue.insert(queue.end(), nodes_[d].children.begin(), nodes_[d].children.end());
    }
  }
  return count;
}

std::optional<std::size_t> Planner::iterate() {
  ++iter_;
  const std::vector<Vec2> point = sample_joint(iter_, rng_, params_, problem_.workspace, problem_.agents.size());
  const std::size_t from = nearest(point);
  const auto v_new = steer(JointState{nodes_[from].pos, nodes_[from].arrival}, point, params_);
  if (!v_new || !edge_collision_free(nodes_[from].pos, v_new->pos)) return std::nullopt;
  const std::vector<std::size_t> near_set = near(v_new->pos);
  const auto index = extend(*v_new, from, near_set);
  if (index) rewire(*index, near_set);
  return index;
}

std::optional<std::pair<std::size_t, std::optional<std::size_t>>> Planner::select() const {
  auto cheapest = [&](std::optional<std::size_t> target) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (in_goal_set(i, target) && (!best || nodes_[i].cost < nodes_[*best].cost)) best = i;
    return best;
  };
  for (std::size_t target : order_)
    if (const auto node = cheapest(target)) return std::pair{*node, std::optional(target)};
  if (const auto node = cheapest(std::nullopt)) return std::pair{*node, std::optional<std::size_t>{}};
  return std::nullopt;
}

PlanResult Planner::plan() {
  while (iter_ < params_.n_sample) iterate();
  auto chosen = select();
  if (!chosen) {
    const int stop = iter_ + params_.n_sample;
    while (iter_ < stop) iterate();
    chosen = select();
  }
  if (!chosen)
    throw NoGoalFound("no connected, synchronized configuration after " + std::to_string(iter_) + " samples");
  return result_for(chosen->first, chosen->second);
}

PlanResult Planner::result_for(std::size_t node, std::optional<std::size_t> target) const {
  PlanResult r;
  r.goal = node;
  r.cost = nodes_[node].cost;
  r.constraint_target = target;
  r.t_final = nodes_[node].t_max();
  r.belief = nodes_[node].belief;
  r.tree_size = nodes_.size();
  r.iterations = iter_;
  for (std::size_t n = node; n != PlanNode::kNone; n = nodes_[n].parent)
    r.joint_path.push_back(JointState{nodes_[n].pos, nodes_[n].arrival});
  std::reverse(r.joint_path.begin(), r.joint_path.end());
  for (std::size_t a = 0; a < problem_.agents.size(); ++a) {
    std::vector<Vec2> pts;
    for (TimeStep t = problem_.agents[a].start_time; t <= r.t_final; ++t) pts.push_back(*position_at(node, a, t));
    r.waypoints.push_back(std::move(pts));
  }
  return r;
}

void Planner::dump(std::ostream& os) const {
  os << "index,parent,cost,t_min,t_max,connected";
  for (std::size_t a = 0; a < problem_.agents.size(); ++a) os << ",x" << a << ",y" << a << ",t" << a;
  os << '\n';
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const PlanNode& n = nodes_[i];
    os << i << ',' << (n.parent == PlanNode::kNone ? -1 : static_cast<long>(n.parent)) << ',' << n.cost << ','
       << n.t_min() << ',' << n.t_max() << ',' << n.connected;
    for (std::size_t a = 0; a < n.pos.size(); ++a) os << ',' << n.pos[a].x() << ',' << n.pos[a].y() << ',' << n.arrival[a];
    os << '\n';
  }
}

}  // namespace dse
