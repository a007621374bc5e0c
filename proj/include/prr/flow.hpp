#pragma once

// Reference solutions of  x'(t) in -(D_1 + ... + D_N + dg)(x(t)).
//
// The integrator is full-batch proximal Euler,
//
//   z_{j+1} = prox_{h g}(z_j - h (D_1 + ... + D_N)(z_j)),
//
// which treats dg implicitly. Its linear interpolation is the object the
// iterates of the reshuffled method are compared against.

#include "prr/core.hpp"
#include "prr/nmf_invariants.hpp"
#include "prr/prr.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace prr {

template <typename Scalar>
struct FlowTrace {
  std::string problem;
  Scalar h = 0;
  Scalar T = 0;
  std::vector<Scalar> times;             // s_j = j h
  std::vector<Vector<Scalar>> states;    // z_j
  std::vector<Extended<Scalar>> phi;     // Phi(z_j)
  std::vector<Scalar> length;            // sum_{i<j} ||z_{i+1} - z_i||
  std::vector<std::string> probe_names;
  std::vector<std::vector<Scalar>> probes; // probes[j][p]
  // false: the problem may admit several solutions and this is the one
  // produced by the oracles' selection.
  bool unique = false;

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }

  Vector<Scalar> velocity(std::size_t j) const { return (states[j + 1] - states[j]) / h; }

  /// z(t) by linear interpolation between grid nodes (clamped to the grid).
  Vector<Scalar> at(Scalar t) const {
    if (states.empty()) throw UsageError("FlowTrace::at on an empty trace");
    if (t <= Scalar(0)) return states.front();
    const Scalar pos = t / h;
    // times that are grid nodes up to rounding map to the node itself
    const Scalar nearest = std::round(pos);
    if (std::abs(pos - nearest) <= Scalar(1e-9) * std::max(Scalar(1), pos))
      return states[std::min(static_cast<std::size_t>(nearest), steps())];
    auto j = static_cast<std::size_t>(std::floor(pos));
    if (j >= steps()) return states.back();
    const Scalar w = pos - static_cast<Scalar>(j);
    if (w == Scalar(0)) return states[j];
    return (Scalar(1) - w) * states[j] + w * states[j + 1];
  }

  Scalar end_time() const { return times.empty() ? Scalar(0) : times.back(); }
};

template <typename Scalar>
FlowTrace<Scalar> integrate(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x0, Scalar h,
                            Scalar T, Scalar divergence_threshold = Scalar(1e12)) {
  problem.validate();
  detail::require_dimension(problem, x0);
  if (!(h > Scalar(0)) || !(T > Scalar(0)) || h > T) throw UsageError("integrate: need 0 < h <= T");
  if (!problem.regularizer.in_domain(x0)) throw PreconditionError("integrate: x0 is not in dom g");

  // ceil(T / h), tolerant of T / h landing a rounding error above an integer
  const Scalar ratio = T / h;
  auto n = static_cast<std::size_t>(std::ceil(ratio));
  if (n > 1 && std::abs(ratio - std::round(ratio)) <= Scalar(1e-9) * ratio)
    n = static_cast<std::size_t>(std::round(ratio));

  FlowTrace<Scalar> tr;
  tr.problem = problem.name;
  tr.h = h;
  tr.T = T;
  tr.unique = problem.unique_trajectories;
  for (const auto &p : problem.probes) tr.probe_names.push_back(p.name);
  tr.times.reserve(n + 1);
  tr.states.reserve(n + 1);
  tr.phi.reserve(n + 1);
  tr.length.reserve(n + 1);
  tr.probes.reserve(n + 1);

  auto record = [&](std::size_t j, const Vector<Scalar> &z, Scalar len) {
    tr.times.push_back(static_cast<Scalar>(j) * h);
    tr.states.push_back(z);
    tr.phi.push_back(eval_phi(problem, z));
    tr.length.push_back(len);
    std::vector<Scalar> pv;
    pv.reserve(problem.probes.size());
    for (const auto &p : problem.probes) pv.push_back(p.eval(z));
    tr.probes.push_back(std::move(pv));
  };

  Vector<Scalar> z = x0;
  Scalar len(0);
  record(0, z, len);
  for (std::size_t j = 0; j < n; ++j) {
    Vector<Scalar> next = problem.regularizer.prox(h, Vector<Scalar>(z - h * field_sum(problem, z)));
    detail::check_divergence(next, divergence_threshold, j);
    len += (next - z).norm();
    z = std::move(next);
    record(j + 1, z, len);
  }
  return tr;
}

template <typename Scalar>
struct EnergyCheck {
  Scalar lhs = 0; // sum_j h ||(z_{j+1} - z_j) / h||^2
  Scalar rhs = 0; // Phi(z_0) - Phi(z_last)
  Scalar gap = 0; // |lhs - rhs|
};

/// Discrete form of  int_0^T ||x'||^2 = Phi(x(0)) - Phi(x(T)).
template <typename Scalar>
EnergyCheck<Scalar> energy_check(const FlowTrace<Scalar> &trace) {
  EnergyCheck<Scalar> e;
  if (trace.states.size() < 2) return e;
  for (std::size_t j = 0; j + 1 < trace.states.size(); ++j)
    e.lhs += (trace.states[j + 1] - trace.states[j]).squaredNorm() / trace.h;
  e.rhs = trace.phi.front().value() - trace.phi.back().value();
  e.gap = std::abs(e.lhs - e.rhs);
  return e;
}

/// Length bound  sum ||z_{j+1} - z_j|| <= sqrt(T) sqrt(Phi(z_0) - inf Phi).
template <typename Scalar>
Scalar flow_length_bound(const FlowTrace<Scalar> &trace, Scalar infimum) {
  return std::sqrt(trace.end_time()) * std::sqrt(std::max(Scalar(0), trace.phi.front().value() - infimum));
}

template <typename Scalar>
struct TrackingResult {
  std::vector<std::pair<Scalar, Scalar>> deviations; // (t_k, ||x_k - z(t_k)||)
  Scalar sup_dev = 0;
};

/// ||x_k - z(t_k)|| for every iterate with t_k inside the flow horizon.
template <typename Scalar>
TrackingResult<Scalar> tracking_compare(const RunTrace<Scalar> &run, const FlowTrace<Scalar> &flow) {
  if (run.rows.empty() || flow.states.empty()) throw UsageError("tracking_compare: empty trace");
  if (run.rows.front().x.size() != flow.states.front().size())
    throw UsageError("tracking_compare: dimension mismatch");
  const Scalar horizon = flow.end_time();
  if (run.rows.size() > 1 && run.rows[1].t > horizon * (Scalar(1) + Scalar(1e-12)))
    throw UsageError("tracking_compare: flow horizon is shorter than the first step");
  TrackingResult<Scalar> out;
  for (const auto &r : run.rows) {
    if (r.t > horizon * (Scalar(1) + Scalar(1e-12))) break;
    const Scalar dev = (r.x - flow.at(r.t)).norm();
    out.deviations.emplace_back(r.t, dev);
    out.sup_dev = std::max(out.sup_dev, dev);
  }
  return out;
}

} // namespace prr
