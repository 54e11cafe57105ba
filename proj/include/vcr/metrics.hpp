#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vcr {

// Time after t0 at which y enters and stays within band * |y_end - y(t0)| of
// its final value. Zero if there was no change to speak of.
double settling_time(const std::vector<double>& t, const std::vector<double>& y, double t0,
                     double band = 0.02);

// Mean of y over the final window seconds.
double window_mean(const std::vector<double>& t, const std::vector<double>& y, double window);

// Minimal CSV table: header plus numeric columns, non-numeric cells become NaN.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> cols;
  const std::vector<double>& col(const std::string& name) const;  // throws SchemaMismatch
  bool has(const std::string& name) const;
};
Table read_csv(const std::string& path);

struct RunSummary {
  std::string dir;
  Eigen::Vector3d settling = Eigen::Vector3d::Zero();  // P_e, P_c, T_e,sec,out
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();    // final-window mean minus reference
  double cop = 0;                                       // final-window mean
  double t_close = 0;
};

// Reads control_log.csv and trajectory.csv from a run directory.
RunSummary summarize_run(const std::string& dir, double t_close, double window = 300);

// Runs are given as directories or manifest paths. Both must have identical
// log and trajectory headers; throws SchemaMismatch.
std::vector<RunSummary> compare_runs(const std::string& run_a, const std::string& run_b,
                                     double t_close, double window = 300);

}  // namespace vcr
