// Slow, independent reference implementations used as test oracles.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "tfmcp/tensor.hpp"

namespace oracle {

using tfmcp::Dims;
using tfmcp::Index;

// All multi-indices of `dims`, first mode fastest.
inline std::vector<std::vector<Index>> multi_indices(const Dims& dims) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> idx(dims.size(), 0);
  const Index n = tfmcp::numel(dims);
  for (Index c = 0; c < n; ++c) {
    out.push_back(idx);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

inline Index vec_offset(const Dims& dims, const std::vector<Index>& idx) {
  Index off = 0, stride = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    off += idx[k] * stride;
    stride *= dims[k];
  }
  return off;
}

// Mode-k unfolding by the index formula: column j = sum_{l != k} i_l prod_{m<l, m != k} d_m.
inline Eigen::MatrixXd unfold(const tfmcp::Tensor& t, std::size_t k) {
  const Dims& dims = t.dims();
  Eigen::MatrixXd out(dims[k], t.size() / dims[k]);
  for (const auto& idx : multi_indices(dims)) {
    Index col = 0, stride = 1;
    for (std::size_t l = 0; l < dims.size(); ++l) {
      if (l == k) continue;
      col += idx[l] * stride;
      stride *= dims[l];
    }
    out(idx[k], col) = t(idx);
  }
  return out;
}

// (t x_k m)[.., p, ..] = sum_j m(p, j) t[.., j, ..]
inline tfmcp::Tensor mode_product(const tfmcp::Tensor& t, std::size_t k, const Eigen::MatrixXd& m) {
  Dims od = t.dims();
  od[k] = m.rows();
  tfmcp::Tensor out(od);
  for (const auto& idx : multi_indices(od)) {
    double s = 0.0;
    auto src = idx;
    for (Index j = 0; j < t.dims()[k]; ++j) {
      src[k] = j;
      s += m(idx[k], j) * t(src);
    }
    out(idx) = s;
  }
  return out;
}

// Lagged cross moment by explicit entry summation over (i, j, t), in long double.
inline Eigen::MatrixXd lagged_moment(const Eigen::MatrixXd& values, int h) {
  const Index d = values.rows(), T = values.cols();
  Eigen::MatrixXd out(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      long double s = 0.0L;
      for (Index t = h; t < T; ++t)
        s += static_cast<long double>(values(i, t - h)) * static_cast<long double>(values(j, t));
      out(i, j) = static_cast<double>(s / static_cast<long double>(T - h));
    }
  return out;
}

// Cyclic Jacobi eigensolver for symmetric matrices; values descending.
struct Eig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline Eig jacobi_eigen(Eigen::MatrixXd a, double tol = 1e-15, int max_sweeps = 100) {
  const Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * std::max(1.0, a.norm())) break;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) > a(y, y); });
  Eig out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  const Eig e = jacobi_eigen(m.transpose() * m);
  return std::sqrt(std::max(0.0, e.values(0)));
}

// Modified Gram-Schmidt with a second pass.
inline Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd q = a;
  for (Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j).normalize();
  }
  return q;
}

// Best permutation by enumeration; returns col_of_row and the score.
inline std::pair<std::vector<Index>, double> brute_force_assignment(const Eigen::MatrixXd& score) {
  const Index n = score.rows();
  std::vector<Index> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_val = -1e300;
  do {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += score(i, perm[i]);
    if (s > best_val) best_val = s, best = perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_val};
}

// Quantile with linear interpolation at (n-1)p, computed from a fresh sort.
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (pos - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace oracle
