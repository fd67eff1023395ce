// Dense order-K tensors in vec order (mode 1 varies fastest) and the
// multilinear primitives built on them: unfoldings, mode products,
// outer products and Khatri-Rao products.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tfmcp/error.hpp"

namespace tfmcp {

using Index = Eigen::Index;
using Dims = std::vector<Index>;

inline Index numel(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

/// Column-major generalization: linear index of (i_1..i_K) is
/// sum_k i_k * prod_{l<k} d_l.
inline Index linear_index(const Dims& dims, const std::vector<Index>& idx) {
  Index lin = 0, stride = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    lin += idx[k] * stride;
    stride *= dims[k];
  }
  return lin;
}

template <typename Scalar>
class DenseTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  DenseTensor() = default;

  explicit DenseTensor(Dims dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_ = Vector::Zero(numel(dims_));
  }

  DenseTensor(Dims dims, Vector data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != numel(dims_))
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match product of dims " + std::to_string(numel(dims_)));
  }

  static DenseTensor Zero(Dims dims) { return DenseTensor(std::move(dims)); }

  static DenseTensor Random(Dims dims) {
    Index n = numel(dims);
    return DenseTensor(std::move(dims), Vector::Random(n));
  }

  const Dims& dims() const { return dims_; }
  Index dim(std::size_t k) const { return dims_.at(k); }
  std::size_t order() const { return dims_.size(); }
  Index size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Scalar& operator()(const std::vector<Index>& idx) { return data_(linear_index(dims_, idx)); }
  Scalar operator()(const std::vector<Index>& idx) const { return data_(linear_index(dims_, idx)); }

  DenseTensor& operator+=(const DenseTensor& other) {
    require_same_shape(other);
    data_ += other.data_;
    return *this;
  }
  DenseTensor& operator-=(const DenseTensor& other) {
    require_same_shape(other);
    data_ -= other.data_;
    return *this;
  }
  DenseTensor& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(Scalar s, DenseTensor a) { return a *= s; }

 private:
  static void check_dims(const Dims& dims) {
    for (Index d : dims)
      if (d <= 0) throw DimensionError("tensor dimensions must be positive");
  }
  void require_same_shape(const DenseTensor& other) const {
    if (dims_ != other.dims_) throw DimensionError("tensor shapes differ");
  }

  Dims dims_;
  Vector data_;
};

using Tensor = DenseTensor<double>;

namespace detail {

inline void check_mode(std::size_t order, std::size_t k) {
  if (k >= order)
    throw DimensionError("mode index " + std::to_string(k) + " out of range for order " +
                         std::to_string(order));
}

inline Index prod_range(const Dims& dims, std::size_t lo, std::size_t hi) {
  Index p = 1;
  for (std::size_t l = lo; l < hi; ++l) p *= dims[l];
  return p;
}

// Contract mode k of a vec-ordered buffer against v. The buffer is viewed as
// (pre, d_k, post); the result is (pre, post).
template <typename Scalar, typename VecIn, typename Vec>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> contract_mode(const VecIn& data, const Dims& dims,
                                                       std::size_t k, const Vec& v) {
  const Index pre = prod_range(dims, 0, k);
  const Index dk = dims[k];
  const Index post = prod_range(dims, k + 1, dims.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(pre * post);
  if (pre == 1) {
    // (d_k, post) block: out = block^T v
    Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> block(data.data(), dk,
                                                                                  post);
    out.noalias() = block.transpose() * v;
  } else {
    for (Index q = 0; q < post; ++q) {
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> block(
          data.data() + q * pre * dk, pre, dk);
      out.segment(q * pre, pre).noalias() = block * v;
    }
  }
  return out;
}

}  // namespace detail

/// Mode-k unfolding (0-based k): d_k x (d/d_k), remaining modes enumerated
/// with the smallest one varying fastest.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unfold(const DenseTensor<Scalar>& t,
                                                            std::size_t k) {
  detail::check_mode(t.order(), k);
  const Dims& dims = t.dims();
  const Index pre = detail::prod_range(dims, 0, k);
  const Index dk = dims[k];
  const Index post = detail::prod_range(dims, k + 1, dims.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(dk, pre * post);
  const Scalar* src = t.data().data();
  for (Index q = 0; q < post; ++q)
    for (Index i = 0; i < dk; ++i)
      for (Index p = 0; p < pre; ++p) m(i, p + pre * q) = src[p + pre * (i + dk * q)];
  return m;
}

/// Inverse of unfold.
template <typename Scalar, typename Derived>
DenseTensor<Scalar> refold(const Eigen::MatrixBase<Derived>& m, const Dims& dims, std::size_t k) {
  detail::check_mode(dims.size(), k);
  const Index pre = detail::prod_range(dims, 0, k);
  const Index dk = dims[k];
  const Index post = detail::prod_range(dims, k + 1, dims.size());
  if (m.rows() != dk || m.cols() != pre * post)
    throw DimensionError("refold: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(dk) + "x" +
                         std::to_string(pre * post));
  DenseTensor<Scalar> t(dims);
  Scalar* dst = t.data().data();
  for (Index q = 0; q < post; ++q)
    for (Index i = 0; i < dk; ++i)
      for (Index p = 0; p < pre; ++p) dst[p + pre * (i + dk * q)] = m(i, p + pre * q);
  return t;
}

template <typename Derived>
auto refold(const Eigen::MatrixBase<Derived>& m, const Dims& dims, std::size_t k) {
  return refold<typename Derived::Scalar, Derived>(m, dims, k);
}

/// t x_k v^T: contracts mode k, returning an order K-1 tensor. Contracting
/// the only mode of a vector yields an order-1 tensor of size 1.
template <typename Scalar, typename Derived>
DenseTensor<Scalar> mode_vec_product(const DenseTensor<Scalar>& t, std::size_t k,
                                     const Eigen::MatrixBase<Derived>& v) {
  detail::check_mode(t.order(), k);
  if (v.size() != t.dim(k))
    throw DimensionError("mode_vec_product: vector length " + std::to_string(v.size()) +
                         " does not match mode size " + std::to_string(t.dim(k)));
  Dims out_dims = t.dims();
  out_dims.erase(out_dims.begin() + static_cast<std::ptrdiff_t>(k));
  if (out_dims.empty()) out_dims.push_back(1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vv = v;
  return DenseTensor<Scalar>(std::move(out_dims),
                             detail::contract_mode<Scalar>(t.data(), t.dims(), k, vv));
}

/// t x_k M for a p x d_k matrix M: mode k is replaced by size p.
template <typename Scalar, typename Derived>
DenseTensor<Scalar> mode_product(const DenseTensor<Scalar>& t, std::size_t k,
                                 const Eigen::MatrixBase<Derived>& m) {
  detail::check_mode(t.order(), k);
  if (m.cols() != t.dim(k)) throw DimensionError("mode_product: matrix columns do not match mode size");
  const Dims& dims = t.dims();
  const Index pre = detail::prod_range(dims, 0, k);
  const Index dk = dims[k];
  const Index post = detail::prod_range(dims, k + 1, dims.size());
  Dims out_dims = dims;
  out_dims[k] = m.rows();
  DenseTensor<Scalar> out(out_dims);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mt = m.transpose();
  for (Index q = 0; q < post; ++q) {
    Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> in(
        t.data().data() + q * pre * dk, pre, dk);
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> dst(
        out.data().data() + q * pre * m.rows(), pre, m.rows());
    dst.noalias() = in * mt;
  }
  return out;
}

/// A (mode, vector) pair for multi_contract. Modes refer to the labels of
/// the input tensor.
template <typename Scalar>
struct Contraction {
  std::size_t mode;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
};

/// Contracts several modes at once. The result keeps the uncontracted modes
/// in their original order; contracting every mode gives a size-1 tensor.
template <typename Scalar>
DenseTensor<Scalar> multi_contract(const DenseTensor<Scalar>& t,
                                   std::vector<Contraction<Scalar>> contractions) {
  std::vector<bool> seen(t.order(), false);
  for (const auto& c : contractions) {
    detail::check_mode(t.order(), c.mode);
    if (seen[c.mode]) throw DimensionError("multi_contract: duplicate mode " + std::to_string(c.mode));
    seen[c.mode] = true;
    if (c.vector.size() != t.dim(c.mode))
      throw DimensionError("multi_contract: vector length mismatch on mode " +
                           std::to_string(c.mode));
  }
  // Highest mode first so the remaining labels stay valid.
  std::sort(contractions.begin(), contractions.end(),
            [](const auto& a, const auto& b) { return a.mode > b.mode; });
  Dims dims = t.dims();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> data = t.data();
  for (const auto& c : contractions) {
    data = detail::contract_mode<Scalar>(data, dims, c.mode, c.vector);
    dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(c.mode));
  }
  if (dims.empty()) dims.push_back(1);
  return DenseTensor<Scalar>(std::move(dims), std::move(data));
}

/// Outer product v_1 o v_2 o ... o v_K.
template <typename Scalar>
DenseTensor<Scalar> outer(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& vectors) {
  if (vectors.empty()) throw DimensionError("outer: empty vector list");
  Dims dims;
  for (const auto& v : vectors) dims.push_back(v.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> data = vectors.front();
  for (std::size_t k = 1; k < vectors.size(); ++k) {
    const auto& v = vectors[k];
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next(data.size() * v.size());
    for (Index j = 0; j < v.size(); ++j) next.segment(j * data.size(), data.size()) = v(j) * data;
    data = std::move(next);
  }
  return DenseTensor<Scalar>(std::move(dims), std::move(data));
}

/// vec(v_1 o ... o v_K) without building the tensor wrapper.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> outer_vec(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& vectors) {
  return outer(vectors).data();
}

/// Columnwise Kronecker product. Matrices are given in increasing mode order;
/// the product is taken in decreasing order so the first matrix varies
/// fastest, which aligns columns with unfold's column enumeration:
///   unfold(outer(a_1..a_K), k) = a_k * khatri_rao({a_l : l != k})^T.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> khatri_rao(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& matrices) {
  if (matrices.empty()) throw DimensionError("khatri_rao: empty matrix list");
  const Index r = matrices.front().cols();
  Index rows = 1;
  for (const auto& m : matrices) {
    if (m.cols() != r) throw DimensionError("khatri_rao: column counts differ");
    rows *= m.rows();
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, r);
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> cols(matrices.size());
  for (Index j = 0; j < r; ++j) {
    for (std::size_t l = 0; l < matrices.size(); ++l) cols[l] = matrices[l].col(j);
    out.col(j) = outer_vec(cols);
  }
  return out;
}

/// Hilbert-Schmidt norm: Euclidean norm of the vectorized tensor.
template <typename Scalar>
Scalar hs_norm(const DenseTensor<Scalar>& t) {
  return t.data().norm();
}

}  // namespace tfmcp
