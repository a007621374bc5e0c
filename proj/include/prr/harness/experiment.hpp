#pragma once

#include "prr/harness/config.hpp"
#include "prr/harness/trace_io.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace prr::harness {

/// Check names accepted in `checks`: feasible, permutation, time_increasing,
/// step_bound, descent (run/sweep/check); energy, balance, product, length
/// (flow).
RunConfig<double> make_run_config(const ExperimentConfig &config, std::uint64_t seed);

Trace run_experiment(const ExperimentConfig &config, const Instance &instance, std::uint64_t seed);

/// Rebuilds the ledgers of a stored trace: restores the per-row exact
/// residuals, re-estimates constants around the stored iterates and reruns the
/// requested checks (step_bound and, for smooth problems, descent by default).
Trace replay(Trace stored, const Instance &instance, const ExperimentConfig &config);

/// Reports every requested ledger on `diag`; false when one fails or is missing.
bool requested_checks_pass(const Trace &trace, const std::vector<std::string> &checks, std::ostream &diag);

struct SweepItem {
  std::size_t alpha_index = 0;
  std::size_t replicate = 0;
  double alpha = 0;
  std::uint64_t seed = 0;
  Trace trace;
  std::string error; // nonempty when the run raised
};

/// Replicate i of grid point a runs with seed mix(config.seed, i) and
/// schedule.alpha = alphas[a]. Items are returned in (alpha, replicate)
/// order whatever the thread count.
std::vector<SweepItem> sweep(const ExperimentConfig &config, std::size_t threads);

/// hardware_concurrency, capped by PRR_THREADS when set.
std::size_t sweep_threads();

} // namespace prr::harness
