#include "tfmcp/series.hpp"

#include <string>

namespace tfmcp {

TensorTimeSeries::TensorTimeSeries(Dims dims, Eigen::MatrixXd values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  if (dims_.empty()) throw DimensionError("series needs at least one mode");
  for (Index d : dims_)
    if (d <= 0) throw DimensionError("series dimensions must be positive");
  if (values_.rows() != numel(dims_))
    throw DimensionError("series rows " + std::to_string(values_.rows()) +
                         " do not match product of dims " + std::to_string(numel(dims_)));
}

TensorTimeSeries TensorTimeSeries::from_slices(const std::vector<Tensor>& slices) {
  if (slices.empty()) throw DimensionError("series needs at least one slice");
  const Dims& dims = slices.front().dims();
  Eigen::MatrixXd values(numel(dims), static_cast<Index>(slices.size()));
  for (std::size_t t = 0; t < slices.size(); ++t) {
    if (slices[t].dims() != dims) throw DimensionError("series slices differ in shape");
    values.col(static_cast<Index>(t)) = slices[t].data();
  }
  return TensorTimeSeries(dims, std::move(values));
}

Tensor TensorTimeSeries::slice(Index t) const {
  return Tensor(dims_, values_.col(t));
}

void TensorTimeSeries::set_slice(Index t, const Tensor& x) {
  if (x.dims() != dims_) throw DimensionError("slice shape does not match series");
  values_.col(t) = x.data();
}

Tensor TensorTimeSeries::as_tensor() const {
  Dims dims = dims_;
  dims.push_back(length());
  return Tensor(std::move(dims), values_.reshaped());
}

Eigen::MatrixXd contract_series(const TensorTimeSeries& x, std::size_t free_mode,
                                const std::vector<Eigen::VectorXd>& vectors) {
  const std::size_t K = x.order();
  if (vectors.size() != K) throw DimensionError("contract_series: need one vector per mode");
  if (free_mode >= K) throw DimensionError("contract_series: free mode out of range");
  Dims dims = x.dims();
  dims.push_back(x.length());
  Eigen::VectorXd data = x.values().reshaped();
  // Contract the highest modes first so lower labels stay put.
  for (std::size_t l = K; l-- > 0;) {
    if (l == free_mode) continue;
    if (vectors[l].size() != dims[l])
      throw DimensionError("contract_series: vector length mismatch on mode " + std::to_string(l));
    data = detail::contract_mode<double>(data, dims, l, vectors[l]);
    dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(l));
  }
  return data.reshaped(x.dims()[free_mode], x.length());
}

Eigen::VectorXd contract_series_all(const TensorTimeSeries& x,
                                    const std::vector<Eigen::VectorXd>& vectors) {
  Eigen::MatrixXd z = contract_series(x, 0, vectors);
  if (vectors[0].size() != z.rows()) throw DimensionError("contract_series_all: vector length");
  return z.transpose() * vectors[0];
}

}  // namespace tfmcp
