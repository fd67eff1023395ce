// Loading error with label matching, factor recovery, explained
// variability and small summary statistics for the benchmark tables.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "tfmcp/estimators.hpp"
#include "tfmcp/model.hpp"

namespace tfmcp {

struct ErrorReport {
  Eigen::MatrixXd per_pair;        // r x K, row i = true factor i under the matching
  double max_error = 0.0;
  double unmatched_max_error = 0.0;  // identity labels
  std::vector<Index> assignment;   // assignment[estimated] = true index
};

/// Maximum-weight assignment on an r x r score matrix; returns
/// col_of_row[i] for every row i.
std::vector<Index> max_weight_assignment(const Eigen::MatrixXd& score);

/// Projector distances between estimated and true loadings after matching
/// labels by maximizing sum_{i,k} |<a_hat_pi(i)k, a_ik>|.
ErrorReport loading_error(const Loadings& est, const Loadings& truth);

/// |corr(w_hat_pi(i) f_hat_pi(i), w_i f_i)| for each true factor i, matched
/// as in loading_error.
Eigen::VectorXd factor_recovery(const FitResult& fit, const CpFactorModel& truth);

/// 1 - sum_t ||X_t - X_hat_t||^2 / sum_t ||X_t||^2.
double explained_variability(const TensorTimeSeries& x, const FitResult& fit);
double explained_variability(const TensorTimeSeries& x, const Eigen::MatrixXd& fitted);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // 0 when ys are constant
};

LinearFit linear_fit_r2(const std::vector<double>& xs, const std::vector<double>& ys);

/// Sample quantile with linear interpolation between order statistics
/// (the R / numpy default). p in [0,1].
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

}  // namespace tfmcp
