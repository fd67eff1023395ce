// The CP factor model X_t = sum_i w_i f_it a_i1 o ... o a_iK + E_t, its
// signal reconstruction and the coherence diagnostics of its loadings.
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "tfmcp/series.hpp"

namespace tfmcp {

/// Loadings are K matrices A_k (d_k x r) with unit columns a_ik.
using Loadings = std::vector<Eigen::MatrixXd>;

struct CpFactorModel {
  Dims dims;
  Eigen::VectorXd weights;                 // w_i > 0
  Loadings loadings;                       // K matrices, d_k x r
  std::optional<Eigen::MatrixXd> factors;  // r x T

  Index rank() const { return weights.size(); }
  std::size_t order() const { return dims.size(); }

  /// Throws DimensionError / DomainError when the invariants fail.
  void validate() const;
};

/// d x r matrix whose column i is vec(a_i1 o ... o a_iK).
Eigen::MatrixXd vectorized_loadings(const Loadings& loadings);

/// sum_i w_i f_it (a_i1 o ... o a_iK) at 0-based time t.
Tensor reconstruct(const CpFactorModel& model, Index t);

/// The noiseless signal for every t as a d x T matrix.
Eigen::MatrixXd signal_series(const CpFactorModel& model);

/// sum_i w_i^2 / (sigma^2 d), assuming unit-variance factors.
double snr(const CpFactorModel& model, double sigma);

struct CoherenceReport {
  Eigen::VectorXd theta_k;           // per-mode max |sigma_ij,k|, i != j
  Eigen::VectorXd delta_k;           // per-mode ||A_k^T A_k - I||_S
  std::vector<Eigen::VectorXd> eta;  // eta[k](j) = (sum_{i != j} sigma_ij,k^2)^{1/2}
  double theta = 0.0;                // over vectorized loadings
  double delta = 0.0;
  double mu_star = 1.0;              // leave-two-out mutual coherence
  Index rank = 0;
  std::size_t order = 0;
};

CoherenceReport coherence_report(const Loadings& loadings);

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// The four coherence inequalities: delta <= min_k delta_k,
/// delta <= (r-1) theta, theta <= prod_k theta_k and
/// delta <= mu* r^{1-K/2} prod_k delta_k.
std::vector<BoundCheck> check_prop1(const CoherenceReport& rep);

struct ModelDiagnostics {
  Eigen::VectorXd lambda;  // lambda_{i,h} = w_i^2 E[f_{i,t-h} f_it]
  double lambda_star = 0.0;
  double snr = 0.0;
};

/// Signal strengths at lag h. With AR(1) coefficients the population
/// autocovariance phi^h / (1 - phi^2) is used, otherwise the sample
/// autocovariance of the stored factors.
ModelDiagnostics diagnostics(const CpFactorModel& model, int h, double sigma,
                             const std::optional<Eigen::VectorXd>& ar_coeffs = std::nullopt);

/// min over i of the gaps to neighbours, with lambda_0 = inf and
/// lambda_{r+1} = 0.
double eigengap(const Eigen::VectorXd& lambda);

}  // namespace tfmcp
