#pragma once

#include <Eigen/Dense>

#include <vector>

#include "tfmcp/tensor.hpp"

namespace tfmcp {

/// T observations of an order-K tensor sharing one shape. Column t of
/// `values` is vec(X_t) in vec order.
class TensorTimeSeries {
 public:
  TensorTimeSeries() = default;
  TensorTimeSeries(Dims dims, Eigen::MatrixXd values);
  static TensorTimeSeries from_slices(const std::vector<Tensor>& slices);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  Index dim() const { return values_.rows(); }
  Index length() const { return values_.cols(); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  Tensor slice(Index t) const;
  void set_slice(Index t, const Tensor& x);

  /// The whole series as an order K+1 tensor with time as the last mode.
  Tensor as_tensor() const;

 private:
  Dims dims_;
  Eigen::MatrixXd values_;
};

/// Contracts every mode of every X_t except `free_mode` with the given
/// vectors (vectors[free_mode] is ignored). Returns d_free x T.
Eigen::MatrixXd contract_series(const TensorTimeSeries& x, std::size_t free_mode,
                                const std::vector<Eigen::VectorXd>& vectors);

/// Full contraction of every X_t: returns the length-T series of scalars.
Eigen::VectorXd contract_series_all(const TensorTimeSeries& x,
                                    const std::vector<Eigen::VectorXd>& vectors);

}  // namespace tfmcp
