#pragma once

#include "prr/errors.hpp"

#include <Eigen/Core>

#include <cmath>

namespace prr {

/// Exact d(0, grad + N_C(x)) for C the nonnegative orthant.
///
/// Coordinate i contributes 0 when x_i = 0 and grad_i >= 0 (the normal cone
/// absorbs it), |grad_i| otherwise.
template <typename Scalar, typename DerivedG, typename DerivedX>
Scalar residual_nonneg(const Eigen::MatrixBase<DerivedG> &grad, const Eigen::MatrixBase<DerivedX> &x) {
  if (grad.size() != x.size()) throw UsageError("residual_nonneg: size mismatch");
  Scalar s(0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= Scalar(0))) throw UsageError("residual_nonneg: point outside the orthant");
    if (x(i) == Scalar(0) && grad(i) >= Scalar(0)) continue;
    s += grad(i) * grad(i);
  }
  return std::sqrt(s);
}

} // namespace prr
