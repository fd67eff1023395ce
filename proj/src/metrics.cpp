#include "tfmcp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tfmcp/error.hpp"
#include "tfmcp/linalg.hpp"

namespace tfmcp {

std::vector<Index> max_weight_assignment(const Eigen::MatrixXd& score) {
  const Index n = score.rows();
  if (score.cols() != n) throw DimensionError("assignment needs a square score matrix");
  if (n == 0) return {};
  // Hungarian method (potentials form) on cost = max - score, 1-based.
  const double top = score.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - score(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<Index> col_of_row(n);
  for (Index j = 1; j <= n; ++j) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

namespace {

void check_pair(const Loadings& est, const Loadings& truth) {
  if (est.size() != truth.size() || est.empty())
    throw DimensionError("loading_error: estimated and true loadings have different orders");
  for (std::size_t k = 0; k < est.size(); ++k)
    if (est[k].rows() != truth[k].rows() || est[k].cols() != truth[k].cols())
      throw DimensionError("loading_error: shape mismatch on mode " + std::to_string(k));
}

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : v;
}

}  // namespace

ErrorReport loading_error(const Loadings& est, const Loadings& truth) {
  check_pair(est, truth);
  const Index r = truth[0].cols();
  const std::size_t K = truth.size();

  // score(est i, true j)
  Eigen::MatrixXd score = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t k = 0; k < K; ++k)
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j)
        score(i, j) += std::abs(unit(est[k].col(i)).dot(unit(truth[k].col(j))));

  ErrorReport rep;
  rep.assignment = max_weight_assignment(score);
  rep.per_pair.resize(r, static_cast<Index>(K));
  for (Index i = 0; i < r; ++i) {
    const Index j = rep.assignment[i];
    for (std::size_t k = 0; k < K; ++k) {
      rep.per_pair(j, k) = projector_distance(unit(est[k].col(i)), unit(truth[k].col(j)));
      rep.unmatched_max_error = std::max(
          rep.unmatched_max_error, projector_distance(unit(est[k].col(i)), unit(truth[k].col(i))));
    }
  }
  rep.max_error = r > 0 ? rep.per_pair.maxCoeff() : 0.0;
  return rep;
}

namespace {

double abs_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double na = ca.norm(), nb = cb.norm();
  if (na == 0.0 || nb == 0.0) throw DegenerateError("factor_recovery: constant factor series");
  return std::abs(ca.dot(cb)) / (na * nb);
}

}  // namespace

Eigen::VectorXd factor_recovery(const FitResult& fit, const CpFactorModel& truth) {
  if (!truth.factors) throw DimensionError("factor_recovery: true model has no factor series");
  const Eigen::MatrixXd& f = *truth.factors;
  if (f.cols() != fit.factors.cols())
    throw DimensionError("factor_recovery: series lengths differ");
  const ErrorReport rep = loading_error(fit.loadings, truth.loadings);
  Eigen::VectorXd out(truth.rank());
  for (Index i = 0; i < fit.rank(); ++i) {
    const Index j = rep.assignment[i];
    out(j) = abs_corr(fit.weights(i) * fit.factors.row(i).transpose(),
                      truth.weights(j) * f.row(j).transpose());
  }
  return out;
}

double explained_variability(const TensorTimeSeries& x, const Eigen::MatrixXd& fitted) {
  if (fitted.rows() != x.dim() || fitted.cols() != x.length())
    throw DimensionError("explained_variability: fitted series has the wrong shape");
  const double total = x.values().squaredNorm();
  if (total == 0.0) throw DegenerateError("explained_variability: zero series");
  return std::min(1.0, 1.0 - (x.values() - fitted).squaredNorm() / total);
}

double explained_variability(const TensorTimeSeries& x, const FitResult& fit) {
  return explained_variability(x, fitted_series(fit));
}

LinearFit linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DimensionError("linear_fit_r2: xs and ys differ in length");
  if (xs.size() < 3) throw DomainError("linear_fit_r2: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n, my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear_fit_r2: all x values are equal");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (syy == 0.0) return out;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (out.intercept + out.slope * xs[i]);
    ssr += e * e;
  }
  out.r2 = 1.0 - ssr / syy;
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace tfmcp
