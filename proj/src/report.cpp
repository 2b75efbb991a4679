#include "dse/report.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace dse {

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

void write_trace_csv(std::ostream& os, const SimulationLog& log) {
  os << "time,e_loc,lambda_max\n";
  for (std::size_t t = 0; t < log.e_loc.size(); ++t)
    os << t << ',' << format_number(log.e_loc[t]) << ',' << format_number(log.lambda[t]) << '\n';
}

void write_team_traces_csv(std::ostream& os, const SimulationLog& log) {
  os << "team,time,t_star,e_d\n";
  for (const TeamEventLog& e : log.events)
    os << e.team + 1 << ',' << e.t << ',' << e.t_star << ',' << format_number(e.e_d) << '\n';
}

void write_summary_json(std::ostream& os, const Scenario& scenario, const SimulationLog& log) {
  const Summary s = summarize(log);
  nlohmann::ordered_json j;
  j["scenario"] = scenario.name;
  j["strategy"] = log.strategy;
  j["seed"] = log.seed;
  j["t_end"] = log.t_end;
  j["team_graph"] = scenario.team_graph;
  j["period"] = log.period;
  j["delay_bound"] = log.delay_bound;
  j["mean_e_loc"] = std::stod(format_number(s.mean_e_loc));
  j["mean_lambda"] = std::stod(format_number(s.mean_lambda));
  j["events"] = log.events.size();
  j["records"] = log.records.size();
  j["diagnostics"] = log.diagnostics;
  os << j.dump(2) << '\n';
}

void write_run_outputs(const std::filesystem::path& dir, const Scenario& scenario, const SimulationLog& log) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("trace.csv");
    write_trace_csv(f, log);
  }
  {
    auto f = open("team_traces.csv");
    write_team_traces_csv(f, log);
  }
  {
    auto f = open("summary.json");
    write_summary_json(f, scenario, log);
  }
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "strategy,seeds,e_loc_mean,e_loc_std,lambda_mean,lambda_std\n";
  for (const CompareRow& r : rows) {
    const auto [em, es] = mean_std(r.e_loc);
    const auto [lm, ls] = mean_std(r.lambda);
    os << r.strategy << ',' << r.e_loc.size() << ',' << format_number(em) << ',' << format_number(es) << ','
       << format_number(lm) << ',' << format_number(ls) << '\n';
  }
}

void print_compare_table(std::ostream& os, const std::vector<CompareRow>& rows) {
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %6s %22s %22s\n", "strategy", "seeds", "mean e_loc (m)", "mean lambda (m^2)");
  os << line;
  for (const CompareRow& r : rows) {
    const auto [em, es] = mean_std(r.e_loc);
    const auto [lm, ls] = mean_std(r.lambda);
    std::snprintf(line, sizeof line, "%-14s %6zu %12.3f +- %6.3f %12.3f +- %6.3f\n", r.strategy.c_str(), r.e_loc.size(),
                  em, es, lm, ls);
    os << line;
  }
}

}  // namespace dse
