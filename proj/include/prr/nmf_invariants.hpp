#pragma once

// Conserved and bounded quantities of nonnegative lp matrix factorization
// flows, f(X, Y) = (1/p) ||X Y^T - M||_p^p over X, Y >= 0.

#include "prr/core.hpp"

#include <cmath>
#include <tuple>
#include <vector>

namespace prr {

/// Per column k: sum_i X_ik^2 - sum_j Y_jk^2 (constant along the flow).
template <typename DerivedX, typename DerivedY>
Vector<typename DerivedX::Scalar> balance_probe(const Eigen::MatrixBase<DerivedX> &X,
                                                const Eigen::MatrixBase<DerivedY> &Y) {
  if (X.cols() != Y.cols()) throw UsageError("balance_probe: X and Y have different column counts");
  return (X.colwise().squaredNorm() - Y.colwise().squaredNorm()).transpose();
}

/// Entrywise lp norm (p >= 1).
template <typename Derived>
typename Derived::Scalar entrywise_norm(const Eigen::MatrixBase<Derived> &A, typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  if (p == Scalar(1)) return A.cwiseAbs().sum();
  if (p == Scalar(2)) return A.norm();
  return std::pow(A.cwiseAbs().array().pow(p).sum(), Scalar(1) / p);
}

/// d = (mn)^(1 - 1/p) (||X0 Y0^T - M||_p + ||M||_p): a bound on every
/// |X_ik(t) Y_jk(t)| along the flow started at (X0, Y0).
template <typename Scalar>
Scalar product_bound_constant(const Matrix<Scalar> &X0, const Matrix<Scalar> &Y0,
                              const Matrix<Scalar> &M, Scalar p) {
  if (X0.cols() != Y0.cols() || X0.rows() != M.rows() || Y0.rows() != M.cols())
    throw UsageError("product_bound_constant: shape mismatch");
  const Scalar mn = static_cast<Scalar>(M.rows() * M.cols());
  const Scalar c = std::pow(mn, Scalar(1) - Scalar(1) / p);
  return c * (entrywise_norm(Matrix<Scalar>(X0 * Y0.transpose() - M), p) + entrywise_norm(M, p));
}

template <typename Scalar>
struct ProductBoundReport {
  Scalar bound = 0;
  Scalar max_product = 0;
  std::vector<std::tuple<Eigen::Index, Eigen::Index, Eigen::Index, Scalar>> violations; // (i, j, k, |X_ik Y_jk|)

  bool ok() const { return violations.empty(); }
};

/// Flags every (i, j, k) with |X_ik Y_jk| > d.
template <typename DerivedX, typename DerivedY>
ProductBoundReport<typename DerivedX::Scalar>
product_bound_probe(const Eigen::MatrixBase<DerivedX> &X, const Eigen::MatrixBase<DerivedY> &Y,
                    typename DerivedX::Scalar d) {
  using Scalar = typename DerivedX::Scalar;
  if (X.cols() != Y.cols()) throw UsageError("product_bound_probe: X and Y have different column counts");
  ProductBoundReport<Scalar> rep;
  rep.bound = d;
  for (Eigen::Index k = 0; k < X.cols(); ++k)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < Y.rows(); ++j) {
        const Scalar v = std::abs(X(i, k) * Y(j, k));
        rep.max_product = std::max(rep.max_product, v);
        if (v > d) rep.violations.emplace_back(i, j, k, v);
      }
  return rep;
}

} // namespace prr
