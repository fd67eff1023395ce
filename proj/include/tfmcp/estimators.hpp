// Estimators for the CP factor model: composite PCA initialization, the
// iterative simultaneous orthogonalization refinement (cPCA + ISO = HOPE),
// and the rank-one / orthogonalized ALS baselines on the lagged moment.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tfmcp/linalg.hpp"
#include "tfmcp/model.hpp"
#include "tfmcp/moments.hpp"

namespace tfmcp {

enum class Method { CPCA, HOPE1, HOPE, CALS, COALS, ALS, OALS };

std::string to_string(Method m);
/// Accepts the display names (cPCA, 1HOPE, HOPE, ...) case-insensitively.
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

struct FitConfig {
  Index r = 1;
  int h = 1;
  double eps = 1e-6;
  int max_iter = 30;
  double gram_floor = 0.1;
  /// Seed for the random initializations of the plain ALS/OALS baselines.
  std::uint64_t seed = 0;
  /// Number of random initializations for ALS/OALS.
  int restarts = 20;
  EigOptions eig{};

  void validate() const;
};

/// Current loading estimates and their floored Gram inverses.
struct ProjectionState {
  Loadings a_hat;
  Loadings b_hat;
  int iteration = 0;
};

struct FitResult {
  Method method = Method::HOPE;
  Dims dims;
  Loadings loadings;          // sign-normalized, unit columns
  Eigen::VectorXd weights;    // w_i >= 0
  Eigen::MatrixXd factors;    // r x T, sum_t f_it^2 = 1
  Eigen::VectorXd lambda_hat; // spectrum behind the initialization
  int iterations = 0;
  bool converged = true;
  std::vector<double> trace;  // max projector change per iteration
  std::vector<std::string> warnings;

  Index rank() const { return weights.size(); }
};

struct CpcaResult {
  Loadings loadings;
  Eigen::VectorXd lambda_hat;
};

/// Composite PCA: top-r eigenvectors of the symmetrized lag-h square
/// unfolding, each reshaped to a tensor and reduced to its per-mode top left
/// singular vectors.
CpcaResult cpca_init(const TensorTimeSeries& x, Index r, int h, const EigOptions& opt = {});
CpcaResult cpca_init(const LaggedMoment& moment, Index r, const EigOptions& opt = {});

using IsoObserver = std::function<void(const ProjectionState&)>;

/// Iterative simultaneous orthogonalization from the given initial
/// loadings. The observer, if set, sees the state after every iteration.
FitResult iso_refine(const TensorTimeSeries& x, const Loadings& init, const FitConfig& cfg,
                     const IsoObserver& observer = {});

FitResult cpca_fit(const TensorTimeSeries& x, const FitConfig& cfg);
FitResult hope(const TensorTimeSeries& x, const FitConfig& cfg);
FitResult one_step_hope(const TensorTimeSeries& x, const FitConfig& cfg);

/// Rank-one ALS on the lag-h moment, one factor at a time.
FitResult cals(const TensorTimeSeries& x, const Loadings& init, const FitConfig& cfg);
FitResult cals(const TensorTimeSeries& x, const LaggedMoment& moment, const Loadings& init,
               const FitConfig& cfg);

/// Orthogonalized ALS on the lag-h moment.
FitResult coals(const TensorTimeSeries& x, const Loadings& init, const FitConfig& cfg);
FitResult coals(const TensorTimeSeries& x, const LaggedMoment& moment, const Loadings& init,
                const FitConfig& cfg);

/// ALS/OALS from cfg.restarts random unit-vector initializations; keeps the
/// run with the largest sum_i u_i^T S u_i, u_i = vec(a_i1 o ... o a_iK).
FitResult als_random(const TensorTimeSeries& x, const FitConfig& cfg);
FitResult oals_random(const TensorTimeSeries& x, const FitConfig& cfg);

/// Runs any method with its default initialization.
FitResult fit(const TensorTimeSeries& x, Method method, const FitConfig& cfg);

/// The lag-h moment and its cPCA initialization, shared by several fits of
/// the same series.
struct PreparedMoment {
  LaggedMoment moment;
  std::optional<CpcaResult> cpca;
};

PreparedMoment prepare(const TensorTimeSeries& x, const FitConfig& cfg);

/// Same as fit() but reuses a prepared moment and initialization.
FitResult fit(const TensorTimeSeries& x, Method method, const FitConfig& cfg,
              const PreparedMoment& prep);

/// One ALS sweep direction: contracts the 2K-order moment on every mode
/// except the second copy of mode k. First copy uses `first` (mode k
/// included), second copy uses `second` (mode k skipped).
Eigen::VectorXd cals_direction(const LaggedMoment& moment, const std::vector<Eigen::VectorXd>& first,
                               const std::vector<Eigen::VectorXd>& second, std::size_t k);

/// mat_k(Sigma_h) times the Khatri-Rao product of the other 2K-1 modes of
/// Q (second copy reusing Q), i.e. the unnormalized OALS update of mode k.
Eigen::MatrixXd coals_update(const LaggedMoment& moment, const Loadings& q, std::size_t k);

/// Z_{t,ik} = X_t contracted on every mode l != k with b_vectors[l].
/// Returns d_k x T.
Eigen::MatrixXd project_z(const TensorTimeSeries& x, const std::vector<Eigen::VectorXd>& b_vectors,
                          std::size_t k);
Eigen::MatrixXd project_z(const TensorTimeSeries& x, const ProjectionState& state, Index i,
                          std::size_t k);

/// xi_ij = prod_{l != k} a_jl^T b_il: leakage of true factor j into the
/// projection built for factor i while updating mode k.
Eigen::MatrixXd projection_leakage(const CpFactorModel& truth, const ProjectionState& state,
                                   std::size_t k);

/// Weights and unit-norm factor series from loadings via
/// s_it = X_t x_1 b_i1 ... x_K b_iK, w_i = ||s_i||, f_i = s_i / w_i.
void emit_weights_and_factors(const TensorTimeSeries& x, FitResult& fit, double gram_floor);

/// X_hat_t = sum_i w_i f_it a_i1 o ... o a_iK as a d x T matrix.
Eigen::MatrixXd fitted_series(const FitResult& fit);

/// The fit viewed as a model (weights clamped to a tiny positive value).
CpFactorModel to_model(const FitResult& fit);

}  // namespace tfmcp
