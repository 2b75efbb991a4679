#pragma once

#include "dse/runtime.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace dse {

/// Fixed-precision decimal text used in every output file.
std::string format_number(double value);

/// `time,e_loc,lambda_max`, one row per step.
void write_trace_csv(std::ostream& os, const SimulationLog& log);
/// `team,time,t_star,e_d`, one row per communication event (team is 1-based).
void write_team_traces_csv(std::ostream& os, const SimulationLog& log);
/// Summary object with the time averages and run metadata.
void write_summary_json(std::ostream& os, const Scenario& scenario, const SimulationLog& log);

/// Writes trace.csv, team_traces.csv and summary.json into `dir`.
void write_run_outputs(const std::filesystem::path& dir, const Scenario& scenario, const SimulationLog& log);

struct CompareRow {
  std::string strategy;
  std::vector<double> e_loc;
  std::vector<double> lambda;
};

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& values);

/// `strategy,seeds,e_loc_mean,e_loc_std,lambda_mean,lambda_std`.
void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows);
/// Console table in the same layout.
void print_compare_table(std::ostream& os, const std::vector<CompareRow>& rows);

}  // namespace dse
