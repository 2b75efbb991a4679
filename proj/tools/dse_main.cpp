#include "dse/report.hpp"
#include "dse/runtime.hpp"
#include "dse/scenario.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string strategy;
  int seeds = 5;
  std::optional<long> t_end;
  std::string team_graph;
};

dse::Scenario load(const Options& o) {
  dse::Scenario s = dse::load_scenario(dse::resolve_scenario(o.config));
  if (o.t_end) s.t_end = *o.t_end;
  if (!o.team_graph.empty()) s.team_graph = o.team_graph;
  s.validate();
  return s;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_run(const Options& o) {
  const dse::Scenario s = load(o);
  const std::string strategy = o.strategy.empty() ? s.strategy : o.strategy;
  const std::uint64_t seed = o.seed.value_or(s.seed);
  const dse::SimulationLog log = dse::run(s, seed, strategy);
  dse::write_run_outputs(o.out, s, log);
  const dse::Summary sum = dse::summarize(log);
  std::cout << "strategy " << strategy << ", seed " << seed << "\n"
            << "mean e_loc = " << dse::format_number(sum.mean_e_loc) << " m\n"
            << "mean lambda = " << dse::format_number(sum.mean_lambda) << " m^2\n";
  for (const std::string& d : log.diagnostics) std::cerr << "note: " << d << '\n';
  return 0;
}

int cmd_compare(const Options& o) {
  const dse::Scenario s = load(o);
  const std::vector<std::string> strategies = o.strategy.empty() ? dse::kStrategies : split(o.strategy);
  if (o.seeds < 1) throw dse::Error("--seeds must be at least 1");
  const std::uint64_t base = o.seed.value_or(s.seed);
  std::vector<dse::CompareRow> rows;
  for (const std::string& strategy : strategies) {
    dse::CompareRow row{strategy, {}, {}};
    for (int k = 0; k < o.seeds; ++k) {
      const dse::Summary sum = dse::summarize(dse::run(s, base + static_cast<std::uint64_t>(k), strategy));
      row.e_loc.push_back(sum.mean_e_loc);
      row.lambda.push_back(sum.mean_lambda);
    }
    rows.push_back(std::move(row));
  }
  std::filesystem::create_directories(o.out);
  std::ofstream csv(std::filesystem::path(o.out) / "compare.csv");
  dse::write_compare_csv(csv, rows);
  dse::print_compare_table(std::cout, rows);
  return 0;
}

int cmd_schedule_check(const Options& o) {
  const dse::Scenario s = load(o);
  const dse::TeamGraph g = s.build_team_graph();
  const dse::Schedule sched = s.build_schedule(g);
  const int period = sched.period();
  std::cout << "team graph '" << s.team_graph << "': " << g.team_count() << " teams, " << g.robot_count()
            << " robots, connected\n";
  for (dse::TeamIndex i = 0; i < g.team_count(); ++i) {
    std::cout << "  T" << i + 1 << " {";
    for (std::size_t k = 0; k < g.members(i).size(); ++k) std::cout << (k ? "," : "") << g.members(i)[k];
    std::cout << "} degree " << g.degree(i) << " slot " << sched.slot(i) << '\n';
  }
  std::cout << "max degree " << g.max_degree() << "\n"
            << "longest shortest path L = " << g.longest_shortest_path() << " teams\n"
            << "period T = " << period << "\n"
            << "delay bound D = (T-1)*L = " << dse::delay_bound(g, period) << " epochs"
            << " (edge-count convention: " << dse::delay_bound_edge_count(g, period) << ")\n"
            << "sequences:\n";
  for (dse::RobotId r : g.robots()) {
    std::cout << "  " << r << " [";
    const auto seq = sched.sequence(r);
    for (std::size_t k = 0; k < seq.size(); ++k)
      std::cout << (k ? "," : "") << (seq[k] ? std::to_string(*seq[k] + 1) : std::string("X"));
    std::cout << "]\n";
  }
  const bool ok = dse::validate(sched, g);
  std::cout << "schedule " << (ok ? "valid" : "INVALID") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed state estimation with intermittently connected robot teams"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "scenario file or bundled name (paper_8x8, paper_4x4)")->required();
    sub->add_option("--team-graph", o.team_graph, "team graph name from the scenario");
    sub->add_option("--t-end", o.t_end, "override the simulated horizon");
  };

  CLI::App* run = app.add_subcommand("run", "run one strategy and write traces");
  add_common(run);
  run->add_option("--seed", o.seed, "random seed (default: scenario seed)");
  run->add_option("--out", o.out, "output directory");
  run->add_option("--strategy", o.strategy, "intermittent, heuristic or all-time");

  CLI::App* compare = app.add_subcommand("compare", "run strategies over several seeds");
  add_common(compare);
  compare->add_option("--seed", o.seed, "first seed (default: scenario seed)");
  compare->add_option("--seeds", o.seeds, "number of seeds");
  compare->add_option("--out", o.out, "output directory");
  compare->add_option("--strategy", o.strategy, "comma-separated strategies");

  CLI::App* check = app.add_subcommand("schedule-check", "report the team graph and its schedule");
  add_common(check);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(o);
    if (compare->parsed()) return cmd_compare(o);
    return cmd_schedule_check(o);
  } catch (const dse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
