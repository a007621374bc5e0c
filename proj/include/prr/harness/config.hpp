#pragma once

// Experiment configuration.
//
// Files are flat `key = value` lines with dotted keys (`#` starts a comment),
// or a JSON object when the first non-blank character is `{`; nested objects
// flatten to dotted keys and arrays to comma-separated lists.
//
// Problem names:
//   toy:<quadratic|abs|quartic|exp|absdiv>
//   nmf:1x1 | nmf:2x2 | nmf:2x2b     built-in matrices
//   nmf                              matrix from problem.matrix
//   sensing                          Gaussian l1 sensing instance
//
// Schedule strings (also accepted as `schedule = ...`):
//   constant:A   poly:A:B[:G]   horizon:T:K   geom:A:T   custom:a0,a1,...

#include "prr/core.hpp"
#include "prr/problems.hpp"
#include "prr/schedules.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace prr::harness {

struct ProblemSpec {
  std::string name = "toy:quadratic";
  std::string matrix;               // for name == "nmf"
  double p = 2;
  long rank = 1;
  std::string split = "rows";       // rows | entries | single
  std::size_t components = 4;       // sensing: number of measurements
  long m = 2, n = 2;                // sensing shape
  std::uint64_t instance_seed = 0;
  std::vector<double> x0;           // empty: the problem's default start
};

struct ScheduleSpec {
  std::string kind = "constant";    // constant | poly | horizon | geom | custom
  double alpha = 0.01;
  double beta = 0;
  std::size_t gamma = 1;
  double T = 1;
  std::size_t K = 0;
  std::vector<double> steps;
  // reach:    nonsummable steps (constant or poly)
  // horizon:  finite total time (horizon or geom)
  // rate:     poly with beta in (1/2, 1), or constant when N = 1
  std::string preset;
};

struct ExperimentConfig {
  ProblemSpec problem;
  ScheduleSpec schedule;
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  std::string permutation = "random"; // random | cyclic
  double slack = 1.05;
  double constants_radius = 1;
  std::size_t constants_samples = 200;
  bool record_inner = false;
  std::vector<std::string> checks;
  std::string output_dir = ".";
  double flow_h = 1e-4;
  double flow_T = 1;
  double energy_tol = 1e-3;
  double balance_tol = 1e-3;
  double max_dev = -1;              // track: fail above this sup deviation when >= 0
  std::size_t replicates = 1;
  std::vector<double> alphas;       // sweep grid; empty: schedule.alpha only
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses flat or JSON text into ordered key/value pairs.
KeyValues parse_key_values(const std::string &text);

/// Applies key/value pairs in order; unknown keys and bad values throw.
void apply_settings(ExperimentConfig &config, const KeyValues &values);

ExperimentConfig load_config(const std::filesystem::path &path);

ScheduleSpec parse_schedule(const std::string &spec);

/// Referenced files exist; schedule parameters are in range; the preset, when
/// named, admits the schedule kind.
void validate(const ExperimentConfig &config);

StepSchedule<double> make_schedule(const ScheduleSpec &spec);

struct Instance {
  CompositeProblem<double> problem;
  Vector<double> x0;
  std::optional<NmfInstance<double>> nmf; // set for NMF problems
};

Instance make_instance(const ProblemSpec &spec);

/// Line 1 "m n", then m rows of n reals.
Matrix<double> read_matrix(const std::filesystem::path &path);

std::vector<double> parse_list(const std::string &text);

} // namespace prr::harness
