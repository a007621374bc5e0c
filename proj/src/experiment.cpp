#include "prr/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ostream>
#include <thread>

namespace prr::harness {

namespace {

bool needs_full(const std::vector<std::string> &checks) {
  return std::find(checks.begin(), checks.end(), "step_bound") != checks.end() ||
         std::find(checks.begin(), checks.end(), "descent") != checks.end();
}

} // namespace

RunConfig<double> make_run_config(const ExperimentConfig &c, std::uint64_t seed) {
  RunConfig<double> rc;
  rc.schedule = make_schedule(c.schedule);
  rc.epochs = c.epochs;
  rc.seed = seed;
  rc.record_inner = c.record_inner;
  rc.check_level = needs_full(c.checks) ? CheckLevel::full : CheckLevel::bounds;
  rc.permutation = c.permutation == "cyclic" ? PermutationMode::cyclic() : PermutationMode::random();
  rc.slack = c.slack;
  rc.constants_radius = c.constants_radius;
  rc.constants_samples = c.constants_samples;
  return rc;
}

Trace run_experiment(const ExperimentConfig &c, const Instance &instance, std::uint64_t seed) {
  const auto rc = make_run_config(c, seed);
  if (std::find(c.checks.begin(), c.checks.end(), "descent") != c.checks.end() && !instance.problem.all_smooth())
    throw UnsupportedCheckError("descent check requested on a problem with nonsmooth components");
  return run(instance.problem, instance.x0, rc);
}

Trace replay(Trace t, const Instance &instance, const ExperimentConfig &c) {
  const auto &problem = instance.problem;
  if (t.rows.empty()) throw UsageError("check: the trace has no rows");
  if (t.rows.front().x.size() != problem.dimension)
    throw UsageError("check: trace coordinates do not match the problem dimension (" +
                     std::to_string(t.rows.front().x.size()) + " vs " + std::to_string(problem.dimension) + ")");
  t.problem = problem.name;
  t.components = problem.size();
  t.smooth = problem.all_smooth();
  t.ledger.clear();
  // derived columns are recomputed from the stored iterates
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    auto &r = t.rows[k];
    r.phi = eval_phi(problem, r.x);
    r.stationarity = stationarity_residual(problem, r.x);
    if (k + 1 < t.rows.size()) r.step_norm = (t.rows[k + 1].x - r.x).norm();
  }

  std::vector<std::string> checks = c.checks;
  if (checks.empty()) {
    checks.push_back("step_bound");
    if (t.smooth) checks.push_back("descent");
  }
  auto wants = [&](const char *n) { return std::find(checks.begin(), checks.end(), n) != checks.end(); };
  if (wants("feasible")) {
    CheckLedger<double> l{"feasible"};
    for (const auto &r : t.rows)
      if (r.k >= 1) l.add(r.k, r.feasible && problem.regularizer.in_domain(r.x), 0, 0);
    t.ledger.push_back(std::move(l));
  }
  if (wants("time_increasing")) {
    CheckLedger<double> l{"time_increasing"};
    for (std::size_t k = 1; k < t.rows.size(); ++k) l.add(k, t.rows[k].t > t.rows[k - 1].t, t.rows[k - 1].t, t.rows[k].t);
    t.ledger.push_back(std::move(l));
  }
  if (wants("step_bound") || wants("descent")) {
    if (wants("descent") && !t.smooth)
      throw UnsupportedCheckError("descent check requested on a problem with nonsmooth components");
    t.constants = estimate_constants(problem, t.iterates(), c.constants_radius, c.constants_samples, mix(c.seed, 1));
    if (wants("step_bound")) t.ledger.push_back(check_step_bound(t, *t.constants, c.slack));
    if (wants("descent")) t.ledger.push_back(check_descent(t, *t.constants, c.slack));
  }
  return t;
}

bool requested_checks_pass(const Trace &trace, const std::vector<std::string> &checks, std::ostream &diag) {
  bool ok = true;
  for (const auto &name : checks) {
    const auto it = std::find_if(trace.ledger.begin(), trace.ledger.end(),
                                 [&](const auto &l) { return l.name == name; });
    if (it == trace.ledger.end()) {
      diag << "check " << name << ": not available for this trace\n";
      ok = false;
      continue;
    }
    const auto failed = it->failed_indices();
    diag << "check " << name << ": " << (failed.empty() ? "pass" : "FAIL") << " (" << it->applicable_count()
         << " applicable of " << it->entries.size() << (it->indicative ? ", indicative" : "") << ")";
    if (!failed.empty()) {
      diag << ", first failure at k = " << failed.front();
      ok = false;
    }
    diag << '\n';
  }
  return ok;
}

std::vector<SweepItem> sweep(const ExperimentConfig &c, std::size_t threads) {
  validate(c);
  const Instance instance = make_instance(c.problem);
  const std::vector<double> alphas = c.alphas.empty() ? std::vector<double>{c.schedule.alpha} : c.alphas;
  std::vector<SweepItem> items;
  for (std::size_t a = 0; a < alphas.size(); ++a)
    for (std::size_t i = 0; i < c.replicates; ++i) {
      SweepItem it;
      it.alpha_index = a;
      it.replicate = i;
      it.alpha = alphas[a];
      it.seed = mix(c.seed, i);
      items.push_back(std::move(it));
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next.fetch_add(1); j < items.size(); j = next.fetch_add(1)) {
      auto &it = items[j];
      ExperimentConfig local = c;
      local.schedule.alpha = it.alpha;
      try {
        it.trace = run_experiment(local, instance, it.seed);
      } catch (const std::exception &e) {
        it.error = e.what();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, items.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  return items;
}

std::size_t sweep_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("PRR_THREADS")) {
    char *end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

} // namespace prr::harness
