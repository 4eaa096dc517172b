#pragma once

#include <optional>
#include <string>
#include <vector>

#include "confdi/discernibility.hpp"
#include "confdi/dynamics.hpp"
#include "confdi/fdi_partial.hpp"

namespace confdi {

// Text graph format: first non-comment line "N <n>", then one arc per line
// "<tail> <head> <weight>". Lines starting with '#' are comments.
WeightedDigraph read_graph(const std::string& path);
WeightedDigraph parse_graph(const std::string& text);
std::string serialize_graph(const WeightedDigraph& g);

// A fault episode over the closed interval [t_start, t_end]; the states
// x(t_start..t_end) evolve under the faulty matrix. t_end unset = permanent.
struct FaultInterval {
  int t_start = 0;
  std::optional<int> t_end;
  int tail = 0;
  int head = 0;
};

// Flat key-value scenario description; see parse_scenario for the syntax.
struct ScenarioConfig {
  std::string graph_path;
  double kappa = 0.0;
  Eigen::VectorXd x0;
  int horizon = 0;
  std::vector<int> observed;  // empty = full-state mode
  std::vector<FaultInterval> faults;
  double eps = 1e-9;
  std::string out_trajectory;
  std::string out_residuals;
  std::string out_audit;
};

// Syntax: one "key = value" pair per line, '#' comments, repeated "fault"
// keys ("t_start t_end tail head", t_end may be "inf"). Unknown keys are an
// error. parse(serialize(c)) == c.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig read_scenario(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& c);

// Converts closed intervals into simulation events: x(a..b) faulty
// means the matrix switches at a-1 and switches back at b.
FaultSchedule to_schedule(const WeightedDigraph& base,
                          const std::vector<FaultInterval>& faults);

// Fixed-format float for byte-identical CSV output (17 significant digits).
std::string format_double(double v);

std::string trajectory_csv(const Trajectory& traj);
std::string audit_csv(const std::vector<AuditEntry>& entries,
                      ObservationMode mode);

// Full-state residual log: one row per step t >= 1.
struct ResidualRow {
  int t = 0;
  double norm = 0.0;
  bool detected = false;
  std::optional<int> head;
  std::optional<double> c_value;
  std::vector<int> tail_candidates;
};
std::string residual_csv(const std::vector<ResidualRow>& rows);

std::string observer_csv(const ObserverRun& run, int p);

void write_file(const std::string& path, const std::string& content);

}  // namespace confdi
