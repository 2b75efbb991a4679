#include "dse/baselines.hpp"
#include "dse/connectivity.hpp"
#include "dse/report.hpp"
#include "dse/runtime.hpp"
#include "dse/scenario.hpp"
#include "dse/schedule.hpp"
#include "dse/team_graph.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace dse;

namespace {

std::vector<std::vector<RobotId>> to_teams(const std::vector<std::vector<int>>& teams) {
  std::vector<std::vector<RobotId>> out;
  for (const auto& t : teams) {
    std::vector<RobotId> ids;
    for (int r : t) ids.push_back(RobotId{r});
    out.push_back(ids);
  }
  return out;
}

std::vector<int> to_ints(const std::vector<RobotId>& ids) {
  std::vector<int> out;
  for (RobotId r : ids) out.push_back(to_int(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_dse, m) {
  m.doc() = "Distributed target tracking with intermittently connected robot teams";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<TeamGraph>(m, "TeamGraph")
      .def_static("build", [](const std::vector<std::vector<int>>& teams) { return TeamGraph::build(to_teams(teams)); })
      .def_property_readonly("team_count", &TeamGraph::team_count)
      .def_property_readonly("robot_count", &TeamGraph::robot_count)
      .def_property_readonly("max_degree", &TeamGraph::max_degree)
      .def_property_readonly("longest_shortest_path", &TeamGraph::longest_shortest_path)
      .def("members", [](const TeamGraph& g, TeamIndex i) { return to_ints(g.members(i)); })
      .def("degree", &TeamGraph::degree)
      .def("robots", [](const TeamGraph& g) { return to_ints(g.robots()); })
      .def("edges", &TeamGraph::edges);

  py::class_<Schedule>(m, "Schedule")
      .def_static("synthesize", &Schedule::synthesize)
      .def_static("from_slots", &Schedule::from_slots)
      .def_property_readonly("period", &Schedule::period)
      .def_property_readonly("slots", &Schedule::slots)
      .def("event_at", [](const Schedule& s, int robot, long epoch) { return s.event_at(RobotId{robot}, epoch); })
      .def("team_epochs", &Schedule::team_epochs);

  m.def("validate_schedule", &validate, py::arg("schedule"), py::arg("graph"));
  m.def("delay_bound", &delay_bound, py::arg("graph"), py::arg("period"));

  py::class_<SensorModel>(m, "SensorModel")
      .def(py::init<>())
      .def_readwrite("max_range", &SensorModel::max_range)
      .def("sigma", &SensorModel::sigma);

  m.def("algebraic_connectivity",
        [](const std::vector<Vec2>& positions, double range) { return algebraic_connectivity(positions, range); });

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("t_end", &Scenario::t_end)
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("team_graph", &Scenario::team_graph)
      .def_readwrite("strategy", &Scenario::strategy)
      .def_readonly("sensor", &Scenario::sensor)
      .def_property_readonly("team_graph_names",
                             [](const Scenario& s) {
                               std::vector<std::string> names;
                               for (const auto& [k, v] : s.team_graphs) names.push_back(k);
                               return names;
                             })
      .def_property_readonly("target_count", [](const Scenario& s) { return s.targets.size(); })
      .def("build_team_graph", &Scenario::build_team_graph)
      .def("build_schedule", &Scenario::build_schedule)
      .def("validate", &Scenario::validate)
      .def("to_json", &serialize_scenario);

  m.def("load_scenario", [](const std::string& name) { return load_scenario(resolve_scenario(name)); },
        py::arg("name_or_path"));
  m.def("parse_scenario", &parse_scenario, py::arg("text"));
  m.attr("strategies") = kStrategies;

  py::class_<TeamEventLog>(m, "TeamEvent")
      .def_readonly("team", &TeamEventLog::team)
      .def_readonly("epoch", &TeamEventLog::epoch)
      .def_readonly("t", &TeamEventLog::t)
      .def_readonly("t_star", &TeamEventLog::t_star)
      .def_readonly("e_d", &TeamEventLog::e_d)
      .def_readonly("lambda_", &TeamEventLog::lambda)
      .def_readonly("fused", &TeamEventLog::fused)
      .def_readonly("arrivals", &TeamEventLog::arrivals)
      .def_readonly("positions", &TeamEventLog::positions)
      .def_property_readonly("members", [](const TeamEventLog& e) { return to_ints(e.members); });

  py::class_<SimulationLog>(m, "SimulationLog")
      .def_readonly("strategy", &SimulationLog::strategy)
      .def_readonly("seed", &SimulationLog::seed)
      .def_readonly("t_end", &SimulationLog::t_end)
      .def_readonly("period", &SimulationLog::period)
      .def_readonly("delay_bound", &SimulationLog::delay_bound)
      .def_readonly("e_loc", &SimulationLog::e_loc)
      .def_readonly("lambda_max", &SimulationLog::lambda)
      .def_readonly("events", &SimulationLog::events)
      .def_readonly("diagnostics", &SimulationLog::diagnostics)
      .def_property_readonly("record_count", [](const SimulationLog& l) { return l.records.size(); })
      .def_property_readonly("tracks", [](const SimulationLog& l) {
        std::map<int, std::vector<Vec2>> out;
        for (const auto& [r, track] : l.tracks) out[to_int(r)] = track;
        return out;
      });

  py::class_<Summary>(m, "Summary")
      .def_readonly("mean_e_loc", &Summary::mean_e_loc)
      .def_readonly("mean_lambda", &Summary::mean_lambda);

  m.def("run", &run, py::arg("scenario"), py::arg("seed"), py::arg("strategy"),
        py::call_guard<py::gil_scoped_release>());
  m.def("summarize", &summarize, py::arg("log"));
  m.def("write_run_outputs", &write_run_outputs, py::arg("dir"), py::arg("scenario"), py::arg("log"));
  m.def("summary_json", [](const Scenario& s, const SimulationLog& log) {
    std::ostringstream os;
    write_summary_json(os, s, log);
    return os.str();
  });
  m.def("format_number", &format_number);
}
