#pragma once

// Proximal random reshuffling:
//
//   x_{k,0} = x_k
//   x_{k,i} = x_{k,i-1} - alpha_k D_{sigma^k_i}(x_{k,i-1}),   i = 1..N
//   x_{k+1} = prox_{alpha_k g}(x_{k,N})
//
// with a fresh permutation sigma^k of the components every epoch.

#include "prr/core.hpp"
#include "prr/ledger.hpp"
#include "prr/rng.hpp"
#include "prr/schedules.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace prr {

enum class CheckLevel { off, bounds, full };

struct PermutationMode {
  enum class Kind { random, cyclic, fixed } kind = Kind::random;
  std::vector<int> order; // for fixed: a permutation of 0..N-1

  static PermutationMode random() { return {}; }
  static PermutationMode cyclic() { return {Kind::cyclic, {}}; }
  static PermutationMode fixed(std::vector<int> order) { return {Kind::fixed, std::move(order)}; }
};

template <typename Scalar>
struct RunConfig {
  StepSchedule<Scalar> schedule = StepSchedule<Scalar>::constant(Scalar(0.01));
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  bool record_inner = false;
  CheckLevel check_level = CheckLevel::bounds;
  PermutationMode permutation;
  Scalar divergence_threshold = Scalar(1e12);
  // Used by CheckLevel::full.
  Scalar slack = Scalar(1.05);
  Scalar constants_radius = Scalar(1);
  std::size_t constants_samples = 200;
};

template <typename Scalar>
struct EpochRecord {
  std::size_t k = 0;
  Scalar t = 0;                          // t_k
  std::optional<Scalar> alpha;           // alpha_k (absent on the final row)
  Extended<Scalar> phi = Scalar(0);      // Phi(x_k)
  std::optional<Scalar> step_norm;       // ||x_{k+1} - x_k||
  std::optional<Scalar> residual_bound;  // upper bound on d(0, dPhi(x_{k+1})), smooth problems
  std::optional<Scalar> stationarity;    // exact d(0, dPhi(x_k)), smooth problems with a cone formula
  bool feasible = true;
  Vector<Scalar> x;
  std::vector<int> permutation;          // sigma^k, zero-based
  std::vector<Vector<Scalar>> inner;     // x_{k,0..N} when recorded
  std::vector<Scalar> probes;
};

template <typename Scalar>
struct RunTrace {
  std::string problem;
  std::size_t components = 0;
  bool smooth = false;
  std::vector<std::string> probe_names;
  std::vector<EpochRecord<Scalar>> rows; // rows[k] for k = 0..K
  std::vector<CheckLedger<Scalar>> ledger;
  std::optional<ConstantEstimate<Scalar>> constants;

  std::size_t epochs() const { return rows.empty() ? 0 : rows.size() - 1; }

  std::vector<Vector<Scalar>> iterates() const {
    std::vector<Vector<Scalar>> out;
    out.reserve(rows.size());
    for (const auto &r : rows) out.push_back(r.x);
    return out;
  }

  bool all_checks_passed() const {
    for (const auto &l : ledger)
      if (!l.all_passed()) return false;
    return true;
  }
};

/// ||field_sum(x_next) - (x_next - x_kN) / alpha||.
///
/// By the optimality condition of the prox step, -(x_next - x_kN) / alpha is
/// an element of dg(x_next), so the vector above is an element of
/// dPhi(x_next) and its norm bounds d(0, dPhi(x_next)) from above.
template <typename Scalar>
Scalar residual_bound(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x_next,
                      const Vector<Scalar> &x_kN, Scalar alpha) {
  if (!(alpha > Scalar(0))) throw UsageError("residual_bound: alpha must be positive");
  if (!problem.all_smooth()) throw UsageError("residual_bound: requires smooth components");
  return (field_sum(problem, x_next) - (x_next - x_kN) / alpha).norm();
}

namespace detail {

template <typename Scalar>
void check_divergence(const Vector<Scalar> &x, Scalar threshold, std::size_t epoch) {
  if (!all_finite(x))
    throw DivergenceError(epoch, "iterate became non-finite in epoch " + std::to_string(epoch));
  if (x.norm() > threshold)
    throw DivergenceError(epoch, "iterate norm exceeded the divergence threshold in epoch " +
                                     std::to_string(epoch));
}

inline std::vector<int> next_permutation(const PermutationMode &mode, int n, Rng &rng) {
  switch (mode.kind) {
  case PermutationMode::Kind::random: return rng.permutation(n);
  case PermutationMode::Kind::cyclic: {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    return p;
  }
  case PermutationMode::Kind::fixed: return mode.order;
  }
  return {};
}

inline bool is_permutation_of_range(const std::vector<int> &p, std::size_t n) {
  if (p.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (int v : p) {
    if (v < 0 || static_cast<std::size_t>(v) >= n || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

template <typename Scalar>
EpochRecord<Scalar> make_record(const CompositeProblem<Scalar> &problem, std::size_t k, Scalar t,
                                const Vector<Scalar> &x) {
  EpochRecord<Scalar> r;
  r.k = k;
  r.t = t;
  r.x = x;
  r.feasible = problem.regularizer.in_domain(x);
  r.phi = eval_phi(problem, x);
  if (problem.all_smooth()) r.stationarity = stationarity_residual(problem, x);
  r.probes.reserve(problem.probes.size());
  for (const auto &p : problem.probes) r.probes.push_back(p.eval(x));
  return r;
}

} // namespace detail

template <typename Scalar>
CheckLedger<Scalar> check_step_bound(const RunTrace<Scalar> &trace,
                                     const ConstantEstimate<Scalar> &constants, Scalar slack);
template <typename Scalar>
CheckLedger<Scalar> check_descent(const RunTrace<Scalar> &trace,
                                  const ConstantEstimate<Scalar> &constants, Scalar slack);

template <typename Scalar>
RunTrace<Scalar> run(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x0,
                     const RunConfig<Scalar> &config) {
  problem.validate();
  detail::require_dimension(problem, x0);
  if (config.epochs == 0) throw UsageError("run: epochs must be at least 1");
  if (!problem.regularizer.in_domain(x0)) throw PreconditionError("run: x0 is not in dom g");
  const auto N = problem.size();
  if (config.permutation.kind == PermutationMode::Kind::fixed &&
      !detail::is_permutation_of_range(config.permutation.order, N))
    throw UsageError("run: fixed order is not a permutation of the components");

  const std::size_t K = config.epochs;
  const std::vector<Scalar> t = config.schedule.partial_sums(K);
  const bool smooth = problem.all_smooth();

  RunTrace<Scalar> trace;
  trace.problem = problem.name;
  trace.components = N;
  trace.smooth = smooth;
  for (const auto &p : problem.probes) trace.probe_names.push_back(p.name);
  trace.rows.reserve(K + 1);

  Rng rng(config.seed);
  Vector<Scalar> x = x0;
  for (std::size_t k = 0; k < K; ++k) {
    EpochRecord<Scalar> rec = detail::make_record(problem, k, t[k], x);
    const Scalar alpha = config.schedule.step(k);
    rec.alpha = alpha;
    rec.permutation = detail::next_permutation(config.permutation, static_cast<int>(N), rng);

    Vector<Scalar> y = x;
    if (config.record_inner) rec.inner.push_back(y);
    for (int i : rec.permutation) {
      const auto idx = static_cast<std::size_t>(i);
      Vector<Scalar> d = problem.components[idx].field(y);
      if (!all_finite(d))
        throw NumericError(idx, "component " + std::to_string(idx) + " returned a non-finite field element");
      y -= alpha * d;
      detail::check_divergence(y, config.divergence_threshold, k);
      if (config.record_inner) rec.inner.push_back(y);
    }
    Vector<Scalar> next = problem.regularizer.prox(alpha, y);
    detail::check_divergence(next, config.divergence_threshold, k);

    rec.step_norm = (next - x).norm();
    if (smooth) rec.residual_bound = residual_bound(problem, next, y, alpha);
    trace.rows.push_back(std::move(rec));
    x = std::move(next);
  }
  trace.rows.push_back(detail::make_record(problem, K, t[K], x));

  if (config.check_level != CheckLevel::off) {
    CheckLedger<Scalar> feas{"feasible"}, perm{"permutation"}, time{"time_increasing"};
    for (const auto &r : trace.rows) {
      if (r.k >= 1) feas.add(r.k, r.feasible, r.feasible ? 0 : 1, 0);
      if (r.alpha) perm.add(r.k, detail::is_permutation_of_range(r.permutation, N), 0, 0);
      if (r.k >= 1) {
        const Scalar prev = trace.rows[r.k - 1].t;
        time.add(r.k, r.t > prev, prev, r.t);
      }
    }
    trace.ledger.push_back(std::move(feas));
    trace.ledger.push_back(std::move(perm));
    trace.ledger.push_back(std::move(time));
  }
  if (config.check_level == CheckLevel::full) {
    std::vector<Vector<Scalar>> centers;
    for (const auto &r : trace.rows) {
      centers.push_back(r.x);
      for (const auto &z : r.inner) centers.push_back(z);
    }
    trace.constants = estimate_constants(problem, centers, config.constants_radius,
                                         config.constants_samples, mix(config.seed, 1));
    trace.ledger.push_back(check_step_bound(trace, *trace.constants, config.slack));
    if (smooth && trace.constants->M)
      trace.ledger.push_back(check_descent(trace, *trace.constants, config.slack));
  }
  return trace;
}

/// ||x_{k+1} - x_k|| <= slack * 2 (N L + L_g) alpha_k for every epoch with
/// alpha_k <= 1 / (2 N L + 2 L_g); other epochs are recorded as not applicable.
template <typename Scalar>
CheckLedger<Scalar> check_step_bound(const RunTrace<Scalar> &trace,
                                     const ConstantEstimate<Scalar> &constants, Scalar slack) {
  CheckLedger<Scalar> ledger{"step_bound"};
  const Scalar N = static_cast<Scalar>(trace.components);
  const Scalar rate = N * constants.L + constants.L_g;
  for (const auto &r : trace.rows) {
    if (!r.alpha || !r.step_norm) continue;
    const Scalar a = *r.alpha;
    const bool applicable = Scalar(2) * rate * a <= Scalar(1);
    const Scalar rhs = slack * Scalar(2) * rate * a;
    ledger.add(r.k, *r.step_norm <= rhs, *r.step_norm, rhs, applicable);
  }
  return ledger;
}

/// Approximate descent:
///
///   Phi(x_{k+1}) <= Phi(x_k) - alpha_k/4 r^2 - ||x_{k+1} - x_k||^2 / (8 alpha_k)
///                   + slack (N-1)^2 N (2N-1) L^2 M^2 alpha_k^3 / 12 + 1e-10
///
/// with r = d(0, dPhi(x_{k+1})). When the exact residual of x_{k+1} is not in
/// the trace, the Fermat upper bound is used instead and the ledger is marked
/// indicative: with an upper bound the check is stricter than the inequality, so a
/// failure there is not a counterexample.
template <typename Scalar>
CheckLedger<Scalar> check_descent(const RunTrace<Scalar> &trace,
                                  const ConstantEstimate<Scalar> &constants, Scalar slack) {
  if (!trace.smooth) throw UnsupportedCheckError("check_descent: requires smooth components");
  if (!constants.M) throw UnsupportedCheckError("check_descent: no gradient Lipschitz estimate");
  CheckLedger<Scalar> ledger{"descent"};
  const Scalar N = static_cast<Scalar>(trace.components);
  const Scalar L = constants.L, M = *constants.M;
  const Scalar coef = (N - 1) * (N - 1) * N * (2 * N - 1) * L * L * M * M / Scalar(12);
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const auto &r = trace.rows[k];
    const auto &next = trace.rows[k + 1];
    if (!r.alpha || !r.step_norm) continue;
    std::optional<Scalar> resid = next.stationarity;
    if (!resid) {
      resid = r.residual_bound;
      ledger.indicative = true;
    }
    if (!resid) throw UnsupportedCheckError("check_descent: trace carries no residuals");
    if (r.phi.is_infinite() || next.phi.is_infinite()) {
      ledger.add(k, false, next.phi.as_scalar(), r.phi.as_scalar());
      continue;
    }
    const Scalar a = *r.alpha;
    const Scalar s = *r.step_norm;
    const Scalar rhs = r.phi.value() - a / 4 * *resid * *resid - s * s / (8 * a) +
                       slack * coef * a * a * a + Scalar(1e-10);
    ledger.add(k, next.phi.value() <= rhs, next.phi.value(), rhs);
  }
  return ledger;
}

} // namespace prr
