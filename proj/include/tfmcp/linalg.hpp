// Matrix decompositions used by the estimators: top-r symmetric eigenpairs,
// top left singular vectors, QR orthonormalization and the floored Gram
// inverse B = A (A^T A)^{-1}.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "tfmcp/error.hpp"

namespace tfmcp {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Top eigenpairs of a symmetric matrix, values in descending order.
template <typename Scalar>
struct EigPairs {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;
};

enum class EigMethod { Auto, Dense, Subspace };

struct EigOptions {
  double tol = 1e-10;
  int max_sweeps = 5000;
  EigMethod method = EigMethod::Auto;
  /// Auto uses the dense solver up to this dimension.
  Eigen::Index dense_threshold = 256;
};

/// Flips v so its entry of largest magnitude is positive (first such entry
/// on ties).
template <typename Derived>
void sign_normalize_inplace(Eigen::MatrixBase<Derived>& v) {
  Eigen::Index arg = 0;
  typename Derived::RealScalar best = -1;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto a = std::abs(v(i));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (v.size() > 0 && v(arg) < 0) v = -v;
}

template <typename Derived>
VectorX<typename Derived::Scalar> sign_normalize(const Eigen::MatrixBase<Derived>& v) {
  VectorX<typename Derived::Scalar> out = v;
  sign_normalize_inplace(out);
  return out;
}

namespace detail {

template <typename Scalar>
EigPairs<Scalar> top_from_dense(const MatrixX<Scalar>& m, Eigen::Index r) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed", NAN);
  EigPairs<Scalar> out;
  // Eigen returns ascending order.
  out.values = es.eigenvalues().tail(r).reverse();
  out.vectors = es.eigenvectors().rightCols(r).rowwise().reverse();
  return out;
}

template <typename Scalar>
MatrixX<Scalar> thin_q(const MatrixX<Scalar>& a) {
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(a);
  return qr.householderQ() * MatrixX<Scalar>::Identity(a.rows(), a.cols());
}

// Block subspace iteration with Rayleigh-Ritz. The block converges to the
// dominant-magnitude invariant subspace; the r algebraically largest Ritz
// pairs are accepted once their residuals pass and they dominate every
// eigenvalue left outside the block. Otherwise the block is widened.
template <typename Scalar>
EigPairs<Scalar> top_from_subspace(const MatrixX<Scalar>& m, Eigen::Index r,
                                   const EigOptions& opt) {
  const Eigen::Index d = m.rows();
  Eigen::Index q = std::min<Eigen::Index>(d, std::max<Eigen::Index>(2 * r, r + 8));
  std::mt19937_64 gen(0x7f4a7c15u);
  std::normal_distribution<double> normal;
  double best_residual = INFINITY;
  while (true) {
    MatrixX<Scalar> v(d, q);
    for (Eigen::Index j = 0; j < q; ++j)
      for (Eigen::Index i = 0; i < d; ++i) v(i, j) = static_cast<Scalar>(normal(gen));
    v = thin_q(v);
    bool separated = true;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      MatrixX<Scalar> w = m * v;
      MatrixX<Scalar> h = v.transpose() * w;
      h = (h + h.transpose()).eval() / Scalar(2);
      Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(h);
      VectorX<Scalar> theta = es.eigenvalues().reverse();
      MatrixX<Scalar> y = es.eigenvectors().rowwise().reverse();
      MatrixX<Scalar> ritz = v * y;
      MatrixX<Scalar> mritz = w * y;
      const Scalar scale = std::max(theta.cwiseAbs().maxCoeff(), Scalar(1e-300));
      Scalar worst = 0;
      for (Eigen::Index j = 0; j < r; ++j)
        worst = std::max(worst, (mritz.col(j) - theta(j) * ritz.col(j)).norm());
      best_residual = std::min<double>(best_residual, double(worst / scale));
      if (worst <= Scalar(opt.tol) * scale) {
        if (q == d || theta(r - 1) >= theta.cwiseAbs().minCoeff()) {
          EigPairs<Scalar> out;
          out.values = theta.head(r);
          out.vectors = ritz.leftCols(r);
          return out;
        }
        separated = false;
        break;
      }
      v = thin_q<Scalar>(mritz);
    }
    if (separated)
      throw ConvergenceError("subspace iteration did not converge in " +
                                 std::to_string(opt.max_sweeps) + " sweeps; residual " +
                                 std::to_string(best_residual),
                             best_residual);
    // Wanted pairs are not separated from the rest of the spectrum: widen.
    if (2 * q >= d) return top_from_dense<Scalar>(m, r);
    q = 2 * q;
  }
}

}  // namespace detail

/// The r algebraically largest eigenpairs of the symmetric part of m.
/// Residuals satisfy ||m v - lambda v|| <= tol * ||m||.
template <typename Derived>
EigPairs<typename Derived::Scalar> sym_top_eigs(const Eigen::MatrixBase<Derived>& m_in,
                                                Eigen::Index r, const EigOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  if (m_in.rows() != m_in.cols()) throw DimensionError("sym_top_eigs: matrix is not square");
  const Eigen::Index d = m_in.rows();
  if (r < 1 || r > d)
    throw DomainError("sym_top_eigs: requested " + std::to_string(r) + " eigenpairs of a " +
                      std::to_string(d) + "x" + std::to_string(d) + " matrix");
  MatrixX<Scalar> m = (m_in + m_in.transpose()) / Scalar(2);
  const bool dense = opt.method == EigMethod::Dense ||
                     (opt.method == EigMethod::Auto && d <= opt.dense_threshold);
  return dense ? detail::top_from_dense<Scalar>(m, r) : detail::top_from_subspace<Scalar>(m, r, opt);
}

/// Unit vector u maximizing ||m^T u||, sign-normalized.
template <typename Derived>
VectorX<typename Derived::Scalar> top_left_singular(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == Scalar(0))
    throw DegenerateError("top_left_singular: zero matrix");
  MatrixX<Scalar> gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(gram);
  VectorX<Scalar> u = es.eigenvectors().col(gram.rows() - 1);
  sign_normalize_inplace(u);
  return u;
}

/// B = A (V max(Lambda, c) V^T)^{-1} where A^T A = V Lambda V^T. Equals
/// A (A^T A)^{-1} when no Gram eigenvalue falls below c.
template <typename Derived>
MatrixX<typename Derived::Scalar> regularized_b(const Eigen::MatrixBase<Derived>& a,
                                                typename Derived::Scalar floor) {
  using Scalar = typename Derived::Scalar;
  if (a.cols() > a.rows())
    throw DomainError("regularized_b: more columns (" + std::to_string(a.cols()) + ") than rows (" +
                      std::to_string(a.rows()) + ")");
  if (!(floor > Scalar(0) && floor < Scalar(1)))
    throw DomainError("regularized_b: Gram floor must lie in (0, 1)");
  MatrixX<Scalar> gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(gram);
  VectorX<Scalar> inv = es.eigenvalues().cwiseMax(floor).cwiseInverse();
  return a * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

/// Thin Q of A = QR with R's diagonal made nonnegative.
template <typename Derived>
MatrixX<typename Derived::Scalar> qr_orthonormalize(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.cols() > a.rows()) throw DegenerateError("qr_orthonormalize: more columns than rows");
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(a);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(a.rows(), a.cols());
  const auto& packed = qr.matrixQR();
  const Scalar scale = std::max(a.norm(), Scalar(1e-300));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Scalar rjj = packed(j, j);
    if (std::abs(rjj) <= Scalar(1e-12) * scale)
      throw DegenerateError("qr_orthonormalize: matrix is rank deficient");
    if (rjj < 0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace tfmcp

namespace tfmcp {

/// ||a a^T - b b^T||_S for unit vectors a, b, i.e. sqrt(1 - <a,b>^2),
/// evaluated as the norm of a's component orthogonal to b so it stays
/// accurate when the vectors nearly coincide.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar projector_distance(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar c = a.dot(b);
  const Scalar s = (a - c * b).norm();
  return std::min(Scalar(1), s);
}

}  // namespace tfmcp
