#include "doctest.h"
#include "json.hpp"

#include "dse/report.hpp"
#include "dse/scenario.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace dse;
using nlohmann::json;

namespace {

json bundled(const std::string& name) {
  std::ifstream in(resolve_scenario(name));
  return json::parse(in);
}

std::string where_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.where();
  }
  return "";
}

struct Shell {
  int code = 0;
  std::string out;
};

Shell shell(const std::string& args) {
  const std::string cmd = std::string(DSE_CLI_PATH) + " " + args + " 2>&1";
  Shell r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"paper_8x8", "paper_4x4"}) {
    const Scenario s = load_scenario(resolve_scenario(name));
    CHECK_NOTHROW(s.validate());
    CHECK(s.t_end == 500);
    CHECK(s.seed == 1);
    CHECK(s.build_team_graph().robot_count() == s.active_robots().size());
  }
  const Scenario s8 = load_scenario(resolve_scenario("paper_8x8"));
  CHECK(s8.team_graph == "cycle");
  CHECK(s8.team_graphs.count("wheel") == 1);
  CHECK(s8.targets.size() == 8);
  CHECK(load_scenario(resolve_scenario("paper_4x4")).targets.size() == 4);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("serialize round-trips") {
  const Scenario s = load_scenario(resolve_scenario("paper_8x8"));
  const std::string text = serialize_scenario(s);
  const Scenario back = parse_scenario(text);
  CHECK(serialize_scenario(back) == text);
  CHECK(back.robots.size() == s.robots.size());
  CHECK((back.initial_belief().cov - s.initial_belief().cov).norm() == 0.0);
  CHECK(back.planner.n_sample == s.planner.n_sample);
}

TEST_CASE("config errors name the offending field") {
  json j = bundled("paper_4x4");
  SUBCASE("bad process noise") {
    j["targets"][0]["Q"] = "big";
    CHECK(where_of(j.dump()) == "$.targets[0].Q");
  }
  SUBCASE("missing field") {
    j["robots"][1].erase("start");
    CHECK(where_of(j.dump()) == "$.robots[1].start");
  }
  SUBCASE("undeclared robot in a team") {
    j["team_graphs"]["ring"][0][1] = 77;
    CHECK(where_of(j.dump()) == "$.team_graphs.ring[0][1]");
  }
  SUBCASE("unknown team graph") {
    j["team_graph"] = "star";
    CHECK(where_of(j.dump()) == "$.team_graph");
  }
  SUBCASE("unknown strategy") {
    j["strategy"] = "teleport";
    CHECK(where_of(j.dump()) == "$.strategy");
  }
  SUBCASE("negative seed") {
    j["seed"] = -3;
    CHECK(where_of(j.dump()) == "$.seed");
  }
  SUBCASE("syntax error reports line and column") {
    CHECK(where_of("{\n  \"name\": \"x\",\n  oops\n}") == "3:3");
  }
}

TEST_CASE("number formatting and csv headers") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333");
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(1e-12) == "1e-12");

  SimulationLog log;
  log.t_end = 1;
  log.e_loc = {0.5, 0.25};
  log.lambda = {0.3, 0.2};
  std::ostringstream trace;
  write_trace_csv(trace, log);
  CHECK(trace.str() == "time,e_loc,lambda_max\n0,0.5,0.3\n1,0.25,0.2\n");

  TeamEventLog ev;
  ev.team = 2;
  ev.t = 7;
  ev.t_star = 5;
  ev.e_d = 0.125;
  log.events.push_back(ev);
  std::ostringstream teams;
  write_team_traces_csv(teams, log);
  CHECK(teams.str() == "team,time,t_star,e_d\n3,7,5,0.125\n");
}

TEST_CASE("summary statistics") {
  auto [m1, s1] = mean_std({2.0});
  CHECK(m1 == 2.0);
  CHECK(s1 == 0.0);
  auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(m == doctest::Approx(2.5));
  CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));

  std::ostringstream csv;
  write_compare_csv(csv, {{"heuristic", {1.0, 3.0}, {0.5, 0.5}}});
  std::string header;
  std::istringstream lines(csv.str());
  std::getline(lines, header);
  CHECK(header == "strategy,seeds,e_loc_mean,e_loc_std,lambda_mean,lambda_std");
  std::string row;
  std::getline(lines, row);
  CHECK(row.rfind("heuristic,2,2,", 0) == 0);
}

TEST_CASE("summary json key order") {
  const Scenario s = load_scenario(resolve_scenario("paper_4x4"));
  SimulationLog log;
  log.strategy = "heuristic";
  log.t_end = 1;
  log.e_loc = {0.5, 0.25};
  log.lambda = {0.3, 0.2};
  std::ostringstream os;
  write_summary_json(os, s, log);
  const json j = json::parse(os.str());
  CHECK(j["mean_e_loc"].get<double>() == doctest::Approx(0.75));
  const std::string text = os.str();
  std::size_t last = 0;
  for (const char* k : {"scenario", "strategy", "seed", "t_end", "team_graph", "period", "delay_bound",
                        "mean_e_loc", "mean_lambda", "events", "records", "diagnostics"}) {
    const std::size_t at = text.find(std::string("\"") + k + "\"");
    REQUIRE(at != std::string::npos);
    CHECK(at >= last);
    last = at;
  }
}

TEST_CASE("cli exit codes and schedule report") {
  const Shell missing = shell("run --config /nonexistent.json");
  CHECK(missing.code == 2);
  CHECK(missing.out.find("config error") != std::string::npos);

  CHECK(shell("run").code != 0);
  CHECK(shell("").code != 0);

  const Shell cycle = shell("schedule-check --config paper_8x8");
  CHECK(cycle.code == 0);
  CHECK(cycle.out.find("period T = 2") != std::string::npos);
  CHECK(cycle.out.find("D = (T-1)*L = 5") != std::string::npos);
  CHECK(cycle.out.find("schedule valid") != std::string::npos);

  const Shell wheel = shell("schedule-check --config paper_8x8 --team-graph wheel");
  CHECK(wheel.code == 0);
  CHECK(wheel.out.find("period T = 3") != std::string::npos);

  CHECK(shell("schedule-check --config paper_8x8 --team-graph nope").code == 2);

  json j = bundled("paper_4x4");
  const json r = j["robots"];
  const auto ids = [&](int i) { return r[i]["id"]; };
  j["team_graphs"]["split"] = json::array({json::array({ids(0), ids(1)}), json::array({ids(0), ids(1)}),
                                           json::array({ids(2), ids(3)}), json::array({ids(2), ids(3)})});
  j["team_graph"] = "split";
  const std::string path = "dse_unit_split.json";
  std::ofstream(path) << j.dump();
  const Shell split = shell("schedule-check --config " + path);
  std::remove(path.c_str());
  CHECK(split.code == 2);
  CHECK(split.out.find("$.team_graphs.split") != std::string::npos);
  CHECK(split.out.find("{T1,T2} {T3,T4}") != std::string::npos);
}
