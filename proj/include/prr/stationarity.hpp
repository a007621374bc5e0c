#pragma once

// (epsilon, delta)-near approximate stationarity: some y in B(x, epsilon)
// carries a field element of norm at most delta. Also the running-minimum
// rate fit for residual sequences.

#include "prr/core.hpp"
#include "prr/rng.hpp"
#include "prr/stationarity_cone.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace prr {

enum class SearchMethod { point, grid, sampling };
// exact_cone: d(0, grad f(y) + dg(y)) computed exactly (smooth f with a
// closed-form cone). selection: the residual of the selected field element,
// an upper bound on d(0, D_Phi(y)) only.
enum class ResidualKind { exact_cone, selection };

template <typename Scalar>
struct StationarityReport {
  Vector<Scalar> point;
  Scalar epsilon = 0;
  Scalar delta = 0;
  bool verdict = false; // true is a certificate; false means "not found within budget"
  std::optional<std::pair<Vector<Scalar>, Scalar>> witness;
  SearchMethod method = SearchMethod::point;
  ResidualKind residual_kind = ResidualKind::selection;
  std::size_t samples = 0; // points evaluated
};

namespace detail {

template <typename Scalar>
std::optional<Scalar> point_residual(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &y) {
  if (!problem.regularizer.in_domain(y)) return std::nullopt;
  const Vector<Scalar> v = field_sum(problem, y);
  if (problem.regularizer.has_normal_residual()) return problem.regularizer.normal_residual(y, v);
  return v.norm();
}

// Visits the points of the lattice h Z^n inside B(x, eps) in lexicographic
// order; stops early when visit returns true.
template <typename Scalar, typename Visit>
bool for_each_lattice_point(const Vector<Scalar> &x, Scalar eps, Scalar h, Visit &&visit) {
  const Eigen::Index n = x.size();
  std::vector<long long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    lo[static_cast<std::size_t>(i)] = static_cast<long long>(std::ceil((x(i) - eps) / h));
    hi[static_cast<std::size_t>(i)] = static_cast<long long>(std::floor((x(i) + eps) / h));
    if (lo[static_cast<std::size_t>(i)] > hi[static_cast<std::size_t>(i)]) return false;
  }
  std::vector<long long> idx = lo;
  Vector<Scalar> y(n);
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) = static_cast<Scalar>(idx[static_cast<std::size_t>(i)]) * h;
    if ((y - x).norm() <= eps && visit(y)) return true;
    Eigen::Index d = n - 1;
    while (d >= 0) {
      auto &v = idx[static_cast<std::size_t>(d)];
      if (v < hi[static_cast<std::size_t>(d)]) {
        ++v;
        break;
      }
      v = lo[static_cast<std::size_t>(d)];
      --d;
    }
    if (d < 0) return false;
  }
}

} // namespace detail

/// Searches B(x, epsilon) for a point whose residual is at most delta.
///
/// x itself is tried first. In dimension <= 3 the candidates are the points
/// of the origin-anchored lattice with spacing 2 epsilon / (budget - 1) that
/// fall in the ball (so grids with equal spacing are nested as epsilon
/// grows); in higher dimension `budget` seeded uniform samples of the ball.
template <typename Scalar>
StationarityReport<Scalar> ball_check(const CompositeProblem<Scalar> &problem, const Vector<Scalar> &x,
                                      Scalar epsilon, Scalar delta, std::size_t budget,
                                      std::uint64_t seed) {
  detail::require_dimension(problem, x);
  if (budget < 1) throw UsageError("ball_check: budget must be at least 1");
  if (!(epsilon >= Scalar(0)) || !(delta >= Scalar(0))) throw UsageError("ball_check: negative radius");

  StationarityReport<Scalar> rep;
  rep.point = x;
  rep.epsilon = epsilon;
  rep.delta = delta;
  rep.residual_kind = problem.all_smooth() && problem.regularizer.has_normal_residual()
                          ? ResidualKind::exact_cone
                          : ResidualKind::selection;

  auto try_point = [&](const Vector<Scalar> &y) {
    ++rep.samples;
    const auto r = detail::point_residual(problem, y);
    if (r && *r <= delta) {
      rep.verdict = true;
      rep.witness = std::make_pair(y, *r);
      return true;
    }
    return false;
  };

  if (try_point(x) || epsilon == Scalar(0) || budget == 1) return rep;

  if (problem.dimension <= 3) {
    rep.method = SearchMethod::grid;
    const Scalar h = Scalar(2) * epsilon / static_cast<Scalar>(budget - 1);
    detail::for_each_lattice_point(x, epsilon, h, try_point);
  } else {
    rep.method = SearchMethod::sampling;
    for (std::size_t s = 0; s < budget; ++s) {
      Rng rng(mix(seed, s));
      if (try_point(rng.in_ball(x, epsilon))) break;
    }
  }
  return rep;
}

/// Least-squares slope of log(min_{i<=k} values_i) against log k over
/// k in [k_min, k_max]; values are indexed from k = 0.
template <typename Scalar>
Scalar rate_fit(const std::vector<Scalar> &values, std::size_t k_min, std::size_t k_max) {
  if (k_min < 1 || k_max <= k_min) throw UsageError("rate_fit: need 1 <= k_min < k_max");
  if (k_max >= values.size()) throw UsageError("rate_fit: window exceeds the sequence");
  Scalar running = std::numeric_limits<Scalar>::infinity();
  Scalar sx(0), sy(0), sxx(0), sxy(0);
  Scalar count(0);
  for (std::size_t k = 0; k <= k_max; ++k) {
    if (!(values[k] > Scalar(0)) || !std::isfinite(values[k]))
      throw UsageError("rate_fit: value at k = " + std::to_string(k) + " is not positive");
    running = std::min(running, values[k]);
    if (k < k_min) continue;
    const Scalar lx = std::log(static_cast<Scalar>(k));
    const Scalar ly = std::log(running);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    count += 1;
  }
  const Scalar mx = sx / count, my = sy / count;
  return (sxy / count - mx * my) / (sxx / count - mx * mx);
}

} // namespace prr
