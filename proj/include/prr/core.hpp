#pragma once

// Composite objectives  Phi(x) = f_1(x) + ... + f_N(x) + g(x).
//
// Each f_i is given by a value oracle and a field oracle that returns ONE
// element of a conservative field D_i(x) (the gradient when f_i is smooth,
// a Clarke selection otherwise). The regularizer g is proper, convex and
// closed with a closed-form proximal map.

#include "prr/errors.hpp"
#include "prr/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prr {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived> &x) {
  return x.allFinite();
}

/// Real number or +infinity. Infinity is a state, never an overflowed float.
template <typename Scalar>
class Extended {
public:
  Extended(Scalar v) : value_(v), infinite_(false) {} // NOLINT(implicit)

  static Extended infinity() {
    Extended e(Scalar(0));
    e.infinite_ = true;
    return e;
  }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }

  Scalar value() const {
    if (infinite_) throw UsageError("value() of +infinity");
    return value_;
  }

  // Finite value or std::numeric_limits<Scalar>::infinity(), for printing.
  Scalar as_scalar() const {
    return infinite_ ? std::numeric_limits<Scalar>::infinity() : value_;
  }

  friend bool operator==(const Extended &a, const Extended &b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend bool operator<(const Extended &a, const Extended &b) {
    if (a.infinite_) return false;
    return b.infinite_ || a.value_ < b.value_;
  }
  friend bool operator<=(const Extended &a, const Extended &b) { return !(b < a); }

  friend Extended operator+(const Extended &a, const Extended &b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return Extended(a.value_ + b.value_);
  }

private:
  Scalar value_;
  bool infinite_;
};

template <typename Scalar>
struct ComponentOracle {
  std::function<Scalar(const Vector<Scalar> &)> value;
  std::function<Vector<Scalar>(const Vector<Scalar> &)> field;
  // field is the exact gradient of value (locally Lipschitz gradient).
  bool smooth = false;
};

template <typename Scalar>
struct Regularizer {
  std::string name;
  std::function<Extended<Scalar>(const Vector<Scalar> &)> value;
  std::function<Vector<Scalar>(Scalar, const Vector<Scalar> &)> prox;
  std::function<bool(const Vector<Scalar> &)> in_domain;
  // (x, v) -> d(0, v + dg(x)) for x in the domain, when a closed form exists.
  std::function<Scalar(const Vector<Scalar> &, const Vector<Scalar> &)> normal_residual;

  bool has_normal_residual() const { return static_cast<bool>(normal_residual); }
};

template <typename Scalar>
struct Probe {
  std::string name;
  std::function<Scalar(const Vector<Scalar> &)> eval;
};

template <typename Scalar>
struct CompositeProblem {
  std::string name;
  std::vector<ComponentOracle<Scalar>> components;
  Regularizer<Scalar> regularizer;
  Eigen::Index dimension = 0;
  std::vector<Probe<Scalar>> probes;
  // A known lower bound on inf Phi (used by flow length diagnostics).
  std::optional<Scalar> infimum_lower_bound;
  // Solutions of x' in -D_Phi(x) are unique (e.g. Phi weakly convex and
  // D_i the Clarke subdifferentials). Otherwise the flow integrator returns
  // one selection-dependent trajectory.
  bool unique_trajectories = false;

  std::size_t size() const { return components.size(); }

  bool all_smooth() const {
    return std::all_of(components.begin(), components.end(),
                       [](const auto &c) { return c.smooth; });
  }

  void validate() const {
    if (components.empty()) throw UsageError(name + ": at least one component is required");
    if (dimension <= 0) throw UsageError(name + ": dimension must be positive");
    if (!regularizer.value || !regularizer.prox || !regularizer.in_domain)
      throw UsageError(name + ": regularizer is incomplete");
  }
};

namespace detail {
template <typename Scalar>
void require_dimension(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x) {
  if (x.size() != problem.dimension)
    throw UsageError("point has dimension " + std::to_string(x.size()) + ", problem '" +
                     problem.name + "' expects " + std::to_string(problem.dimension));
}
} // namespace detail

/// Phi(x); +infinity exactly when x is outside dom g.
template <typename Scalar>
Extended<Scalar> eval_phi(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x) {
  detail::require_dimension(problem, x);
  if (!problem.regularizer.in_domain(x)) return Extended<Scalar>::infinity();
  Scalar f(0);
  for (const auto &c : problem.components) f += c.value(x);
  return Extended<Scalar>(f) + problem.regularizer.value(x);
}

/// One element of (D_1 + ... + D_N)(x).
template <typename Scalar>
Vector<Scalar> field_sum(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x) {
  detail::require_dimension(problem, x);
  Vector<Scalar> sum = Vector<Scalar>::Zero(problem.dimension);
  for (std::size_t i = 0; i < problem.components.size(); ++i) {
    Vector<Scalar> v = problem.components[i].field(x);
    if (v.size() != problem.dimension || !all_finite(v))
      throw NumericError(i, "component " + std::to_string(i) + " returned a non-finite field element");
    sum += v;
  }
  return sum;
}

/// d(0, field_sum(x) + dg(x)) when the regularizer provides a closed form.
template <typename Scalar>
std::optional<Scalar> stationarity_residual(const CompositeProblem<Scalar> &problem,
                                            const Vector<Scalar> &x) {
  if (!problem.regularizer.has_normal_residual() || !problem.regularizer.in_domain(x))
    return std::nullopt;
  return problem.regularizer.normal_residual(x, field_sum(problem, x));
}

/// Sampled local constants around a set of centers. Every value is a lower
/// bound of the corresponding supremum over B(centers, radius).
template <typename Scalar>
struct ConstantEstimate {
  Scalar L = 0;                 // max_i sup ||D_i||
  std::optional<Scalar> M;      // max_i Lipschitz constant of grad f_i (smooth problems)
  Scalar L_g = 0;               // sup d(0, dg) over the domain part of the balls
  Scalar radius = 1;
  std::vector<Vector<Scalar>> centers;
  std::size_t sample_count = 0;
};

/// Estimates L, M and L_g on B(centers, radius).
///
/// The centers themselves are always evaluated. Sample s is drawn from the
/// substream mix(seed, s) in the ball around centers[s % centers.size()], so
/// a larger sample count only adds points and never lowers an estimate. M is
/// the largest divided difference ||D_i(y) - D_i(y')|| / ||y - y'|| over
/// pairs with y' drawn in B(y, radius / 4), and is only computed when every
/// component is smooth. L_g is the largest normal_residual(y, 0) over
/// in-domain points; a regularizer without a closed form (all shipped
/// indicators have one) falls back to 0.
template <typename Scalar>
ConstantEstimate<Scalar> estimate_constants(const CompositeProblem<Scalar> &problem,
                                            const std::vector<Vector<Scalar>> &centers,
                                            Scalar radius, std::size_t samples,
                                            std::uint64_t seed) {
  if (centers.empty()) throw UsageError("estimate_constants: no centers");
  if (!(radius > Scalar(0))) throw UsageError("estimate_constants: radius must be positive");
  for (const auto &c : centers) detail::require_dimension(problem, c);

  const bool smooth = problem.all_smooth();
  const auto &reg = problem.regularizer;
  ConstantEstimate<Scalar> est;
  est.radius = radius;
  est.centers = centers;
  est.sample_count = samples;
  if (smooth) est.M = Scalar(0);
  bool found_domain_point = false;

  // Only points inside the balls contribute to L; the partner points used
  // for divided differences may lie slightly outside.
  auto fields = [&](const Vector<Scalar> &y, bool in_ball) {
    std::vector<Vector<Scalar>> out;
    out.reserve(problem.size());
    for (std::size_t i = 0; i < problem.size(); ++i) {
      Vector<Scalar> v = problem.components[i].field(y);
      if (!all_finite(v)) throw NumericError(i, "non-finite field while estimating constants");
      if (in_ball) est.L = std::max(est.L, v.norm());
      out.push_back(std::move(v));
    }
    return out;
  };
  auto visit_domain = [&](const Vector<Scalar> &y) {
    if (!reg.in_domain(y)) return;
    found_domain_point = true;
    if (reg.has_normal_residual())
      est.L_g = std::max(est.L_g, reg.normal_residual(y, Vector<Scalar>::Zero(y.size())));
  };

  for (const auto &c : centers) {
    fields(c, true);
    visit_domain(c);
  }
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(mix(seed, s));
    const Vector<Scalar> y = rng.in_ball(centers[s % centers.size()], radius);
    const auto fy = fields(y, true);
    visit_domain(y);
    if (smooth) {
      const Vector<Scalar> y2 = rng.in_ball(y, radius / Scalar(4));
      const Scalar dist = (y2 - y).norm();
      if (dist > Scalar(0)) {
        const auto fy2 = fields(y2, false);
        for (std::size_t i = 0; i < fy.size(); ++i)
          *est.M = std::max(*est.M, (fy2[i] - fy[i]).norm() / dist);
      }
    }
  }
  if (!found_domain_point)
    throw DomainSamplingError("estimate_constants: no sampled point lies in dom g");
  return est;
}

} // namespace prr
