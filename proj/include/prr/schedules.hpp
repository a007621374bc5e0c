#pragma once

// Step-size sequences alpha_0, alpha_1, ... and their partial sums
// t_k = alpha_0 + ... + alpha_{k-1}.

#include "prr/core.hpp"
#include "prr/errors.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace prr {

enum class ScheduleKind { constant_horizon, polynomial, geometric, custom };

inline const char *to_string(ScheduleKind k) {
  switch (k) {
  case ScheduleKind::constant_horizon: return "constant_horizon";
  case ScheduleKind::polynomial: return "polynomial";
  case ScheduleKind::geometric: return "geometric";
  case ScheduleKind::custom: return "custom";
  }
  return "?";
}

template <typename Scalar>
class StepSchedule {
public:
  /// alpha_k = T / K for k < K, then exhausted.
  static StepSchedule constant_horizon(Scalar T, std::size_t K) {
    if (!(T > Scalar(0)) || K == 0) throw UsageError("constant_horizon: need T > 0 and K >= 1");
    StepSchedule s(ScheduleKind::constant_horizon);
    s.alpha_ = T / static_cast<Scalar>(K);
    s.horizon_ = T;
    s.length_ = K;
    return s;
  }

  /// alpha_k = alpha / (k + gamma)^beta; beta = 0 gives constant steps.
  static StepSchedule polynomial(Scalar alpha, Scalar beta, std::size_t gamma = 1) {
    if (!(alpha > Scalar(0))) throw UsageError("polynomial: alpha must be positive");
    if (!(beta >= Scalar(0) && beta <= Scalar(1))) throw UsageError("polynomial: beta must lie in [0, 1]");
    if (gamma == 0) throw UsageError("polynomial: gamma must be a positive integer");
    StepSchedule s(ScheduleKind::polynomial);
    s.alpha_ = alpha;
    s.beta_ = beta;
    s.gamma_ = gamma;
    return s;
  }

  static StepSchedule constant(Scalar alpha) { return polynomial(alpha, Scalar(0), 1); }

  /// alpha_k = alpha * rho^k.
  static StepSchedule geometric(Scalar alpha, Scalar rho) {
    if (!(alpha > Scalar(0))) throw UsageError("geometric: alpha must be positive");
    if (!(rho > Scalar(0) && rho < Scalar(1))) throw UsageError("geometric: rho must lie in (0, 1)");
    StepSchedule s(ScheduleKind::geometric);
    s.alpha_ = alpha;
    s.rho_ = rho;
    s.horizon_ = alpha / (Scalar(1) - rho);
    return s;
  }

  /// Geometric steps with rho = 1 - alpha / T, so that the total is exactly T.
  static StepSchedule geometric_with_total(Scalar alpha, Scalar T) {
    if (!(alpha > Scalar(0) && alpha < T)) throw UsageError("geometric: need 0 < alpha < T");
    StepSchedule s = geometric(alpha, Scalar(1) - alpha / T);
    s.horizon_ = T;
    return s;
  }

  static StepSchedule custom(std::vector<Scalar> steps) {
    if (steps.empty()) throw UsageError("custom schedule: no steps");
    for (Scalar a : steps)
      if (!(a > Scalar(0)) || !std::isfinite(a)) throw UsageError("custom schedule: steps must be positive");
    StepSchedule s(ScheduleKind::custom);
    s.length_ = steps.size();
    s.steps_ = std::move(steps);
    return s;
  }

  ScheduleKind kind() const { return kind_; }
  Scalar alpha() const { return alpha_; }
  Scalar beta() const { return beta_; }
  std::size_t gamma() const { return gamma_; }
  Scalar rho() const { return rho_; }
  // Total sum for summable kinds.
  std::optional<Scalar> horizon() const { return horizon_; }
  // Number of steps for finite kinds.
  std::optional<std::size_t> length() const { return length_; }
  const std::vector<Scalar> &steps() const { return steps_; }

  Scalar step(std::size_t k) const {
    if (length_ && k >= *length_)
      throw ExhaustedScheduleError("schedule exhausted: step " + std::to_string(k) + " of " +
                                   std::to_string(*length_));
    switch (kind_) {
    case ScheduleKind::constant_horizon: return alpha_;
    case ScheduleKind::polynomial:
      if (beta_ == Scalar(0)) return alpha_;
      return alpha_ / std::pow(static_cast<Scalar>(k + gamma_), beta_);
    case ScheduleKind::geometric: return alpha_ * std::pow(rho_, static_cast<Scalar>(k));
    case ScheduleKind::custom: return steps_[k];
    }
    return alpha_;
  }

  /// t_k = sum_{i<k} alpha_i. Closed forms for constant and geometric kinds,
  /// compensated summation otherwise.
  Scalar partial_sum(std::size_t k) const {
    if (length_ && k > *length_)
      throw ExhaustedScheduleError("partial_sum beyond schedule length");
    switch (kind_) {
    case ScheduleKind::constant_horizon:
      return *horizon_ * static_cast<Scalar>(k) / static_cast<Scalar>(*length_);
    case ScheduleKind::geometric:
      // alpha (1 - rho^k) / (1 - rho) = T (1 - rho^k)
      return -*horizon_ * std::expm1(static_cast<Scalar>(k) * std::log(rho_));
    case ScheduleKind::polynomial:
      if (beta_ == Scalar(0)) return alpha_ * static_cast<Scalar>(k);
      [[fallthrough]];
    case ScheduleKind::custom: break;
    }
    Scalar sum(0), comp(0);
    for (std::size_t i = 0; i < k; ++i) {
      // Neumaier summation
      const Scalar a = step(i);
      const Scalar t = sum + a;
      comp += std::abs(sum) >= std::abs(a) ? (sum - t) + a : (a - t) + sum;
      sum = t;
    }
    return sum + comp;
  }

  /// t_0, ..., t_K in one pass (bitwise equal to partial_sum(k) for each k).
  std::vector<Scalar> partial_sums(std::size_t K) const {
    if (length_ && K > *length_) throw ExhaustedScheduleError("partial_sums beyond schedule length");
    std::vector<Scalar> out(K + 1);
    const bool closed = kind_ != ScheduleKind::custom &&
                        !(kind_ == ScheduleKind::polynomial && beta_ != Scalar(0));
    if (closed) {
      for (std::size_t k = 0; k <= K; ++k) out[k] = partial_sum(k);
      return out;
    }
    Scalar sum(0), comp(0);
    out[0] = 0;
    for (std::size_t i = 0; i < K; ++i) {
      const Scalar a = step(i);
      const Scalar t = sum + a;
      comp += std::abs(sum) >= std::abs(a) ? (sum - t) + a : (a - t) + sum;
      sum = t;
      out[i + 1] = sum + comp;
    }
    return out;
  }

private:
  explicit StepSchedule(ScheduleKind kind) : kind_(kind) {}

  ScheduleKind kind_;
  Scalar alpha_ = 0;
  Scalar beta_ = 0;
  std::size_t gamma_ = 1;
  Scalar rho_ = 0;
  std::optional<Scalar> horizon_;
  std::optional<std::size_t> length_;
  std::vector<Scalar> steps_;
};

/// A sufficient step ceiling 1 / (2 max{N L + L_g, N M}) built from sampled
/// constants. It is a suggestion: the constants are lower bounds.
template <typename Scalar>
Scalar suggested_max_step(const ConstantEstimate<Scalar> &c, std::size_t N) {
  const Scalar n = static_cast<Scalar>(N);
  Scalar denom = n * c.L + c.L_g;
  if (c.M) denom = std::max(denom, n * *c.M);
  if (!(denom > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return Scalar(1) / (Scalar(2) * denom);
}

} // namespace prr
