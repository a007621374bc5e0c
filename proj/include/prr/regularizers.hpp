#pragma once

// Closed-form proximal regularizers. Each one provides prox, the domain test
// and the exact residual d(0, v + dg(x)).

#include "prr/core.hpp"
#include "prr/stationarity_cone.hpp"

#include <limits>

namespace prr {

template <typename Scalar>
Regularizer<Scalar> zero_regularizer() {
  Regularizer<Scalar> g;
  g.name = "zero";
  g.value = [](const Vector<Scalar> &) { return Extended<Scalar>(Scalar(0)); };
  g.prox = [](Scalar, const Vector<Scalar> &x) { return Vector<Scalar>(x); };
  g.in_domain = [](const Vector<Scalar> &x) { return all_finite(x); };
  g.normal_residual = [](const Vector<Scalar> &, const Vector<Scalar> &v) { return v.norm(); };
  return g;
}

/// Indicator of the nonnegative orthant; prox is the componentwise clamp at 0.
template <typename Scalar>
Regularizer<Scalar> nonnegative_orthant() {
  Regularizer<Scalar> g;
  g.name = "nonnegative_orthant";
  g.in_domain = [](const Vector<Scalar> &x) { return all_finite(x) && (x.array() >= Scalar(0)).all(); };
  g.value = [in = g.in_domain](const Vector<Scalar> &x) {
    return in(x) ? Extended<Scalar>(Scalar(0)) : Extended<Scalar>::infinity();
  };
  g.prox = [](Scalar, const Vector<Scalar> &x) -> Vector<Scalar> { return x.cwiseMax(Scalar(0)); };
  g.normal_residual = [](const Vector<Scalar> &x, const Vector<Scalar> &v) {
    return residual_nonneg<Scalar>(v, x);
  };
  return g;
}

/// Indicator of the box [lo, hi] (entries may be -inf / +inf).
template <typename Scalar>
Regularizer<Scalar> box(Vector<Scalar> lo, Vector<Scalar> hi) {
  if (lo.size() != hi.size()) throw UsageError("box: bound sizes differ");
  if ((lo.array() > hi.array()).any()) throw UsageError("box: lo > hi");
  Regularizer<Scalar> g;
  g.name = "box";
  g.in_domain = [lo, hi](const Vector<Scalar> &x) {
    return x.size() == lo.size() && all_finite(x) && (x.array() >= lo.array()).all() &&
           (x.array() <= hi.array()).all();
  };
  g.value = [in = g.in_domain](const Vector<Scalar> &x) {
    return in(x) ? Extended<Scalar>(Scalar(0)) : Extended<Scalar>::infinity();
  };
  g.prox = [lo, hi](Scalar, const Vector<Scalar> &x) -> Vector<Scalar> {
    return x.cwiseMax(lo).cwiseMin(hi);
  };
  // N(x)_i is (-inf, 0] at an active lower bound, [0, inf) at an active upper
  // bound, all of R when both are active, {0} otherwise.
  g.normal_residual = [lo, hi](const Vector<Scalar> &x, const Vector<Scalar> &v) {
    Scalar s(0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const bool at_lo = x(i) == lo(i);
      const bool at_hi = x(i) == hi(i);
      Scalar r = std::abs(v(i));
      if (at_lo && at_hi) r = 0;
      else if (at_lo && v(i) >= Scalar(0)) r = 0;
      else if (at_hi && v(i) <= Scalar(0)) r = 0;
      s += r * r;
    }
    return std::sqrt(s);
  };
  return g;
}

/// lambda * ||x||_1, prox = soft thresholding at alpha * lambda.
template <typename Scalar>
Regularizer<Scalar> soft_threshold(Scalar lambda) {
  if (!(lambda >= Scalar(0))) throw UsageError("soft_threshold: lambda must be nonnegative");
  Regularizer<Scalar> g;
  g.name = "l1";
  g.in_domain = [](const Vector<Scalar> &x) { return all_finite(x); };
  g.value = [lambda](const Vector<Scalar> &x) {
    return Extended<Scalar>(lambda * x.template lpNorm<1>());
  };
  g.prox = [lambda](Scalar alpha, const Vector<Scalar> &x) -> Vector<Scalar> {
    const Scalar t = alpha * lambda;
    return x.array().sign() * (x.array().abs() - t).max(Scalar(0));
  };
  g.normal_residual = [lambda](const Vector<Scalar> &x, const Vector<Scalar> &v) {
    Scalar s(0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Scalar r;
      if (x(i) > Scalar(0)) r = std::abs(v(i) + lambda);
      else if (x(i) < Scalar(0)) r = std::abs(v(i) - lambda);
      else r = std::max(std::abs(v(i)) - lambda, Scalar(0));
      s += r * r;
    }
    return std::sqrt(s);
  };
  return g;
}

} // namespace prr
