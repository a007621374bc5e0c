#pragma once

// Shipped problem instances: nonnegative lp matrix factorization (with
// optional observation mask), l1 matrix sensing, and one-/two-dimensional
// toys.
//
// Nonsmooth fields use the minimal-norm selection sign(0) = 0.

#include "prr/core.hpp"
#include "prr/nmf_invariants.hpp"
#include "prr/regularizers.hpp"
#include "prr/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prr {

using Entry = std::pair<Eigen::Index, Eigen::Index>;
using EntryBlock = std::vector<Entry>;

template <typename Scalar>
Scalar sign0(Scalar t) {
  return t > Scalar(0) ? Scalar(1) : (t < Scalar(0) ? Scalar(-1) : Scalar(0));
}

/// (X, Y) with X m x r and Y n x r, flattened column-major, X block first.
struct NmfPacking {
  Eigen::Index m = 0, n = 0, r = 0;

  Eigen::Index dimension() const { return (m + n) * r; }

  template <typename Scalar>
  Eigen::Map<const Matrix<Scalar>> X(const Vector<Scalar> &z) const {
    return {z.data(), m, r};
  }
  template <typename Scalar>
  Eigen::Map<const Matrix<Scalar>> Y(const Vector<Scalar> &z) const {
    return {z.data() + m * r, n, r};
  }

  template <typename Scalar>
  Vector<Scalar> pack(const Matrix<Scalar> &X, const Matrix<Scalar> &Y) const {
    if (X.rows() != m || X.cols() != r || Y.rows() != n || Y.cols() != r)
      throw UsageError("NmfPacking::pack: shape mismatch");
    Vector<Scalar> z(dimension());
    Eigen::Map<Matrix<Scalar>>(z.data(), m, r) = X;
    Eigen::Map<Matrix<Scalar>>(z.data() + m * r, n, r) = Y;
    return z;
  }
};

template <typename Scalar>
struct NmfInstance {
  Matrix<Scalar> M;
  Eigen::Index r = 1;
  Scalar p = 2;
  std::vector<EntryBlock> partition;
  // Observed entries; all entries when absent.
  std::optional<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> mask;

  NmfPacking packing() const { return {M.rows(), M.cols(), r}; }

  /// One component per row of M.
  static NmfInstance row_blocks(Matrix<Scalar> M, Eigen::Index r, Scalar p) {
    NmfInstance in{std::move(M), r, p, {}, std::nullopt};
    for (Eigen::Index i = 0; i < in.M.rows(); ++i) {
      EntryBlock b;
      for (Eigen::Index j = 0; j < in.M.cols(); ++j) b.emplace_back(i, j);
      in.partition.push_back(std::move(b));
    }
    return in;
  }

  /// One component per entry of M (row-major order).
  static NmfInstance entrywise(Matrix<Scalar> M, Eigen::Index r, Scalar p) {
    NmfInstance in{std::move(M), r, p, {}, std::nullopt};
    for (Eigen::Index i = 0; i < in.M.rows(); ++i)
      for (Eigen::Index j = 0; j < in.M.cols(); ++j) in.partition.push_back({{i, j}});
    return in;
  }

  /// A single component holding every entry (full-batch proximal gradient).
  static NmfInstance single_block(Matrix<Scalar> M, Eigen::Index r, Scalar p) {
    NmfInstance in{std::move(M), r, p, {}, std::nullopt};
    EntryBlock b;
    for (Eigen::Index i = 0; i < in.M.rows(); ++i)
      for (Eigen::Index j = 0; j < in.M.cols(); ++j) b.emplace_back(i, j);
    in.partition.push_back(std::move(b));
    return in;
  }

  /// One component per observed entry (l1 completion when p = 1).
  static NmfInstance masked(Matrix<Scalar> M, Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask,
                            Eigen::Index r, Scalar p) {
    NmfInstance in{std::move(M), r, p, {}, std::move(mask)};
    for (Eigen::Index i = 0; i < in.M.rows(); ++i)
      for (Eigen::Index j = 0; j < in.M.cols(); ++j)
        if ((*in.mask)(i, j)) in.partition.push_back({{i, j}});
    return in;
  }

  void validate() const {
    if (!(p >= Scalar(1))) throw UsageError("lp NMF: p must be at least 1");
    if (r < 1 || M.rows() < 1 || M.cols() < 1) throw UsageError("lp NMF: empty shape");
    if (!M.allFinite()) throw UsageError("lp NMF: M has non-finite entries");
    if (partition.empty()) throw UsageError("lp NMF: empty partition");
    if (mask && (mask->rows() != M.rows() || mask->cols() != M.cols()))
      throw UsageError("lp NMF: mask shape differs from M");
    Eigen::MatrixXi count = Eigen::MatrixXi::Zero(M.rows(), M.cols());
    for (const auto &block : partition) {
      if (block.empty()) throw UsageError("lp NMF: empty block in partition");
      for (auto [i, j] : block) {
        if (i < 0 || i >= M.rows() || j < 0 || j >= M.cols()) throw UsageError("lp NMF: entry out of range");
        ++count(i, j);
      }
    }
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const int want = (!mask || (*mask)(i, j)) ? 1 : 0;
        if (count(i, j) != want)
          throw UsageError("lp NMF: partition must cover every observed entry exactly once");
      }
  }
};

namespace detail {

// sign(t) |t|^(p-1), zero at t = 0 for every p >= 1.
template <typename Scalar>
Scalar lp_weight(Scalar t, Scalar p) {
  if (t == Scalar(0)) return Scalar(0);
  if (p == Scalar(1)) return sign0(t);
  if (p == Scalar(2)) return t;
  return sign0(t) * std::pow(std::abs(t), p - Scalar(1));
}

template <typename Scalar>
Scalar lp_power(Scalar t, Scalar p) {
  if (p == Scalar(1)) return std::abs(t);
  if (p == Scalar(2)) return t * t;
  return std::pow(std::abs(t), p);
}

} // namespace detail

/// Phi(X, Y) = sum over blocks of (1/p) sum_{(i,j) in block} |(X Y^T - M)_ij|^p
///             + indicator(X >= 0, Y >= 0).
///
/// Block field: ((Lambda . |R|^(p-1)) Y, (Lambda . |R|^(p-1))^T X) restricted
/// to the block's entries of R = X Y^T - M, with Lambda = sign(R) and the
/// selection sign(0) = 0. Components are smooth exactly when p >= 2.
template <typename Scalar>
CompositeProblem<Scalar> make_lp_nmf(const NmfInstance<Scalar> &instance) {
  instance.validate();
  const NmfPacking pk = instance.packing();
  const Matrix<Scalar> M = instance.M;
  const Scalar p = instance.p;

  CompositeProblem<Scalar> prob;
  prob.name = "lp_nmf";
  prob.dimension = pk.dimension();
  prob.regularizer = nonnegative_orthant<Scalar>();
  prob.infimum_lower_bound = Scalar(0);
  prob.unique_trajectories = true;

  for (const auto &block : instance.partition) {
    ComponentOracle<Scalar> c;
    c.smooth = p >= Scalar(2);
    c.value = [pk, M, p, block](const Vector<Scalar> &z) {
      const auto X = pk.X(z);
      const auto Y = pk.Y(z);
      Scalar s(0);
      for (auto [i, j] : block) s += detail::lp_power(Scalar(X.row(i).dot(Y.row(j)) - M(i, j)), p);
      return s / p;
    };
    c.field = [pk, M, p, block](const Vector<Scalar> &z) {
      const auto X = pk.X(z);
      const auto Y = pk.Y(z);
      Vector<Scalar> g = Vector<Scalar>::Zero(pk.dimension());
      Eigen::Map<Matrix<Scalar>> gX(g.data(), pk.m, pk.r);
      Eigen::Map<Matrix<Scalar>> gY(g.data() + pk.m * pk.r, pk.n, pk.r);
      for (auto [i, j] : block) {
        const Scalar e = detail::lp_weight(Scalar(X.row(i).dot(Y.row(j)) - M(i, j)), p);
        if (e == Scalar(0)) continue;
        gX.row(i) += e * Y.row(j);
        gY.row(j) += e * X.row(i);
      }
      return g;
    };
    prob.components.push_back(std::move(c));
  }

  for (Eigen::Index k = 0; k < pk.r; ++k)
    prob.probes.push_back({"balance[" + std::to_string(k) + "]", [pk, k](const Vector<Scalar> &z) {
                             return Scalar(balance_probe(pk.X(z), pk.Y(z))(k));
                           }});
  prob.probes.push_back({"max_product", [pk](const Vector<Scalar> &z) {
                           const auto X = pk.X(z);
                           const auto Y = pk.Y(z);
                           Scalar mx(0);
                           for (Eigen::Index k = 0; k < pk.r; ++k)
                             mx = std::max(mx, X.col(k).cwiseAbs().maxCoeff() * Y.col(k).cwiseAbs().maxCoeff());
                           return mx;
                         }});
  return prob;
}

/// Sensing matrices A_i (m x n), measurements b_i, inner rank r. Variables
/// X (m x r) and Y (r x n), packed column-major with X first.
template <typename Scalar>
struct SensingInstance {
  std::vector<Matrix<Scalar>> A;
  std::vector<Scalar> b;
  Eigen::Index r = 1;

  Eigen::Index m() const { return A.empty() ? 0 : A.front().rows(); }
  Eigen::Index n() const { return A.empty() ? 0 : A.front().cols(); }
  Eigen::Index dimension() const { return (m() + n()) * r; }

  Vector<Scalar> pack(const Matrix<Scalar> &X, const Matrix<Scalar> &Y) const {
    if (X.rows() != m() || X.cols() != r || Y.rows() != r || Y.cols() != n())
      throw UsageError("SensingInstance::pack: shape mismatch");
    Vector<Scalar> z(dimension());
    Eigen::Map<Matrix<Scalar>>(z.data(), m(), r) = X;
    Eigen::Map<Matrix<Scalar>>(z.data() + m() * r, r, n()) = Y;
    return z;
  }

  /// Gaussian sensing matrices and measurements of a random planted
  /// rank-r product.
  static SensingInstance random(std::size_t N, Eigen::Index m, Eigen::Index n, Eigen::Index r,
                                std::uint64_t seed) {
    SensingInstance in;
    in.r = r;
    Rng rng(seed);
    Matrix<Scalar> X(m, r), Y(r, n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = static_cast<Scalar>(rng.normal());
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = static_cast<Scalar>(rng.normal());
    const Matrix<Scalar> target = X * Y;
    for (std::size_t i = 0; i < N; ++i) {
      Matrix<Scalar> A(m, n);
      for (Eigen::Index e = 0; e < A.size(); ++e) A.data()[e] = static_cast<Scalar>(rng.normal());
      in.b.push_back((A.array() * target.array()).sum());
      in.A.push_back(std::move(A));
    }
    return in;
  }
};

/// Phi(X, Y) = sum_i |<A_i, X Y> - b_i|, g = 0. Clarke selection
/// sign(<A_i, XY> - b_i) (A_i Y^T, X^T A_i) with sign(0) = 0.
template <typename Scalar>
CompositeProblem<Scalar> make_l1_sensing(const SensingInstance<Scalar> &instance) {
  if (instance.A.empty() || instance.A.size() != instance.b.size())
    throw UsageError("l1 sensing: need N >= 1 matrices and as many measurements");
  if (instance.r < 1) throw UsageError("l1 sensing: rank must be positive");
  const Eigen::Index m = instance.m(), n = instance.n(), r = instance.r;
  for (const auto &A : instance.A)
    if (A.rows() != m || A.cols() != n) throw UsageError("l1 sensing: sensing matrices differ in shape");

  CompositeProblem<Scalar> prob;
  prob.name = "l1_sensing";
  prob.dimension = instance.dimension();
  prob.regularizer = zero_regularizer<Scalar>();
  prob.infimum_lower_bound = Scalar(0);
  prob.unique_trajectories = true;
  for (std::size_t i = 0; i < instance.A.size(); ++i) {
    const Matrix<Scalar> A = instance.A[i];
    const Scalar b = instance.b[i];
    auto residual = [A, b, m, n, r](const Vector<Scalar> &z) {
      Eigen::Map<const Matrix<Scalar>> X(z.data(), m, r);
      Eigen::Map<const Matrix<Scalar>> Y(z.data() + m * r, r, n);
      return Scalar((A.array() * (X * Y).array()).sum() - b);
    };
    ComponentOracle<Scalar> c;
    c.value = [residual](const Vector<Scalar> &z) { return std::abs(residual(z)); };
    c.field = [residual, A, m, n, r](const Vector<Scalar> &z) {
      Eigen::Map<const Matrix<Scalar>> X(z.data(), m, r);
      Eigen::Map<const Matrix<Scalar>> Y(z.data() + m * r, r, n);
      const Scalar s = sign0(residual(z));
      Vector<Scalar> g(z.size());
      Eigen::Map<Matrix<Scalar>>(g.data(), m, r) = s * A * Y.transpose();
      Eigen::Map<Matrix<Scalar>>(g.data() + m * r, r, n) = s * X.transpose() * A;
      return g;
    };
    prob.components.push_back(std::move(c));
  }
  return prob;
}

/// Named low-dimensional problems (N = 1):
///   quadratic  x^2 / 2
///   abs        |x|
///   quartic    x^4             (diverges under large constant steps)
///   exp        e^x             (lower bounded, no stationary point)
///   absdiv     |x| / y + indicator(y >= 1)
///
/// For absdiv the smooth part is extended off the domain as |x| / max(y, 1),
/// which leaves Phi unchanged and keeps f locally Lipschitz on R^2.
template <typename Scalar>
CompositeProblem<Scalar> make_toy(const std::string &name) {
  CompositeProblem<Scalar> prob;
  prob.name = name;
  prob.dimension = 1;
  prob.regularizer = zero_regularizer<Scalar>();
  prob.infimum_lower_bound = Scalar(0);
  ComponentOracle<Scalar> c;
  if (name == "quadratic") {
    c.value = [](const Vector<Scalar> &x) { return x(0) * x(0) / 2; };
    c.field = [](const Vector<Scalar> &x) { return Vector<Scalar>(x); };
    c.smooth = true;
    prob.unique_trajectories = true;
  } else if (name == "abs") {
    c.value = [](const Vector<Scalar> &x) { return std::abs(x(0)); };
    c.field = [](const Vector<Scalar> &x) { return Vector<Scalar>::Constant(1, sign0(x(0))); };
    prob.unique_trajectories = true;
  } else if (name == "quartic") {
    c.value = [](const Vector<Scalar> &x) { return x(0) * x(0) * x(0) * x(0); };
    c.field = [](const Vector<Scalar> &x) { return Vector<Scalar>::Constant(1, 4 * x(0) * x(0) * x(0)); };
    c.smooth = true;
    prob.unique_trajectories = true;
  } else if (name == "exp") {
    c.value = [](const Vector<Scalar> &x) { return std::exp(x(0)); };
    c.field = [](const Vector<Scalar> &x) { return Vector<Scalar>::Constant(1, std::exp(x(0))); };
    c.smooth = true;
    prob.unique_trajectories = true;
  } else if (name == "absdiv") {
    prob.dimension = 2;
    Vector<Scalar> lo(2), hi(2);
    lo << -std::numeric_limits<Scalar>::infinity(), Scalar(1);
    hi << std::numeric_limits<Scalar>::infinity(), std::numeric_limits<Scalar>::infinity();
    prob.regularizer = box<Scalar>(lo, hi);
    c.value = [](const Vector<Scalar> &x) { return std::abs(x(0)) / std::max(x(1), Scalar(1)); };
    c.field = [](const Vector<Scalar> &x) {
      const Scalar y = std::max(x(1), Scalar(1));
      Vector<Scalar> g(2);
      g(0) = sign0(x(0)) / y;
      g(1) = x(1) > Scalar(1) ? -std::abs(x(0)) / (y * y) : Scalar(0);
      return g;
    };
  } else {
    throw UsageError("unknown toy problem '" + name + "'");
  }
  prob.components.push_back(std::move(c));
  return prob;
}

} // namespace prr
