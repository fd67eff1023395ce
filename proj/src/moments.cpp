#include "tfmcp/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tfmcp {

Tensor LaggedMoment::tensor(std::uint64_t max_bytes) const {
  const auto bytes = static_cast<std::uint64_t>(raw.size()) * sizeof(double);
  if (bytes > max_bytes)
    throw DomainError("lagged moment tensor needs " + std::to_string(bytes) +
                      " bytes, over the budget of " + std::to_string(max_bytes));
  Dims full = dims;
  full.insert(full.end(), dims.begin(), dims.end());
  return Tensor(std::move(full), raw.reshaped());
}

LaggedMoment lagged_cross_moment(const TensorTimeSeries& x, int h) {
  const Index T = x.length();
  if (h < 1 || h > T - 1)
    throw DomainError("lag h=" + std::to_string(h) + " outside 1..T-1 (T=" + std::to_string(T) + ")");
  const Index n = T - h;
  LaggedMoment m;
  m.h = h;
  m.dims = x.dims();
  m.raw.noalias() = x.values().leftCols(n) * x.values().rightCols(n).transpose();
  m.raw /= static_cast<double>(n);
  m.square = (m.raw + m.raw.transpose()) / 2.0;
  return m;
}

const Eigen::MatrixXd& square_unfold(const LaggedMoment& m) { return m.square; }

double explained_fraction(const LaggedMoment& m, Index r, const EigOptions& opt) {
  const double total = m.square.squaredNorm();
  if (total == 0.0) throw DegenerateError("explained_fraction: moment is identically zero");
  auto eig = sym_top_eigs(m.square, r, opt);
  return std::min(1.0, eig.values.squaredNorm() / total);
}

double explained_fraction(const TensorTimeSeries& x, int h, Index r, const EigOptions& opt) {
  return explained_fraction(lagged_cross_moment(x, h), r, opt);
}

LagScan scan_lags(const TensorTimeSeries& x, int h_max, Index r, const EigOptions& opt) {
  if (h_max < 1 || h_max > x.length() - 1)
    throw DomainError("h_max=" + std::to_string(h_max) + " outside 1..T-1");
  LagScan scan;
  double best = -1.0;
  for (int h = 1; h <= h_max; ++h) {
    double f = explained_fraction(x, h, r, opt);
    scan.fractions.push_back(f);
    if (f > best) {
      best = f;
      scan.selected = h;
    }
  }
  return scan;
}

int select_lag(const TensorTimeSeries& x, int h_max, Index r, const EigOptions& opt) {
  return scan_lags(x, h_max, r, opt).selected;
}

Eigen::MatrixXd multi_lag_refine(const TensorTimeSeries& x, int h_max, Index r,
                                 const Eigen::MatrixXd& u0, int sweeps, const EigOptions& opt) {
  if (u0.rows() != x.dim() || u0.cols() != r)
    throw DimensionError("multi_lag_refine: initial basis must be d x r");
  if (h_max < 1 || h_max > x.length() - 1)
    throw DomainError("h_max=" + std::to_string(h_max) + " outside 1..T-1");
  Eigen::MatrixXd u = u0;
  if (sweeps <= 0) return u;
  std::vector<Eigen::MatrixXd> squares;
  for (int h = 1; h <= h_max; ++h) squares.push_back(lagged_cross_moment(x, h).square);
  for (int s = 0; s < sweeps; ++s) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.dim(), x.dim());
    for (const auto& sh : squares) {
      Eigen::MatrixXd su = sh * u;
      acc.noalias() += su * su.transpose();
    }
    Eigen::MatrixXd next = sym_top_eigs(acc, r, opt).vectors;
    // ||P_new - P_old||_S is the sine of the largest principal angle,
    // i.e. the norm of next's component outside span(u).
    Eigen::MatrixXd outside = next - u * (u.transpose() * next);
    const double change = Eigen::JacobiSVD<Eigen::MatrixXd>(outside).singularValues()(0);
    u = std::move(next);
    if (change <= 1e-8) break;
  }
  return u;
}

}  // namespace tfmcp
