// Lagged cross-moment tensors of a tensor time series and the lag
// selection utilities built on their spectra.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "tfmcp/linalg.hpp"
#include "tfmcp/series.hpp"

namespace tfmcp {

/// Sample lag-h cross moment (T-h)^{-1} sum_t X_{t-h} o X_t.
///
/// `raw` is the d x d square unfolding (rows index X_{t-h}, columns X_t);
/// its column-major storage is exactly the order-2K tensor in vec order.
/// `square` is the symmetrized (raw + raw^T)/2.
struct LaggedMoment {
  int h = 1;
  Dims dims;
  Eigen::MatrixXd raw;
  Eigen::MatrixXd square;

  /// Order-2K tensor with dims (d_1..d_K, d_1..d_K). Throws DomainError when
  /// it would exceed `max_bytes`.
  Tensor tensor(std::uint64_t max_bytes = std::uint64_t{2} << 30) const;
};

LaggedMoment lagged_cross_moment(const TensorTimeSeries& x, int h);

/// The symmetrized square unfolding.
const Eigen::MatrixXd& square_unfold(const LaggedMoment& m);

/// sum_{i<=r} lambda_i^2 / ||square||_F^2 for the symmetrized moment.
double explained_fraction(const LaggedMoment& m, Index r, const EigOptions& opt = {});
double explained_fraction(const TensorTimeSeries& x, int h, Index r, const EigOptions& opt = {});

struct LagScan {
  std::vector<double> fractions;  // fractions[h-1] for h = 1..h_max
  int selected = 1;
};

/// Explained fraction for every h in 1..h_max; the argmax (smallest h on
/// ties) is `selected`.
LagScan scan_lags(const TensorTimeSeries& x, int h_max, Index r, const EigOptions& opt = {});
int select_lag(const TensorTimeSeries& x, int h_max, Index r, const EigOptions& opt = {});

/// Refines a d x r orthonormal basis by repeatedly taking the top-r
/// eigenvectors of sum_{h<=h_max} S_h U U^T S_h. Stops after `sweeps`
/// sweeps or once the projector moves by at most 1e-8 in spectral norm.
Eigen::MatrixXd multi_lag_refine(const TensorTimeSeries& x, int h_max, Index r,
                                 const Eigen::MatrixXd& u0, int sweeps,
                                 const EigOptions& opt = {});

}  // namespace tfmcp
