// Synthetic data for the CP factor model: coherence-controlled loadings,
// AR(1) factors and Kronecker-structured Gaussian noise.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "tfmcp/model.hpp"

namespace tfmcp {

using Rng = std::mt19937_64;

/// Independent sub-streams of one seed. Loadings, factors and noise each
/// draw from their own stream, so changing w or T does not perturb the
/// loadings drawn for a given seed.
enum class Stream : std::uint32_t { Loadings = 1, Factors = 2, Noise = 3 };

Rng make_rng(std::uint64_t seed, Stream stream);

/// Seed for replication `rep` of an experiment seeded with `seed`.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep);

struct SimConfig {
  std::string name = "custom";
  Dims dims{40, 40};
  Index r = 2;
  Index T = 400;
  double w = 6.0;
  double delta = 0.0;
  Eigen::VectorXd ar_coeffs = Eigen::Vector2d(0.8, 0.6);
  /// Off-diagonal noise correlation, shared by every mode.
  double psi = 0.1;
  double sigma = 1.0;
  int burn_in = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimOverrides {
  std::optional<Dims> dims;
  std::optional<Index> r;
  std::optional<Index> T;
  std::optional<double> w;
  std::optional<double> delta;
  std::optional<Eigen::VectorXd> ar_coeffs;
  std::optional<double> psi;
  std::optional<double> sigma;
  std::optional<int> burn_in;
  std::optional<std::uint64_t> seed;
};

/// The experiment configurations I-V with any overrides applied.
SimConfig named_config(const std::string& name, const SimOverrides& overrides = {});
void apply_overrides(SimConfig& cfg, const SimOverrides& overrides);

/// QR-orthonormalized Gaussian loadings; for delta > 0 every column i >= 2
/// is bent towards column 1 so that <vec a_1, vec a_i> = delta / (r - 1).
Loadings gen_loadings(const Dims& dims, Index r, double delta, Rng& rng);

/// r x T independent AR(1) chains with N(0,1) innovations, started from the
/// stationary law and run through `burn_in` discarded steps.
Eigen::MatrixXd gen_ar1_factors(const Eigen::VectorXd& phis, Index T, Rng& rng, int burn_in = 200);

/// Symmetric square root of the equicorrelation matrix (1 on the diagonal,
/// psi elsewhere). Throws DomainError unless it is positive definite.
Eigen::MatrixXd equicorrelation_sqrt(Index d, double psi);

/// i.i.d. noise with cov(vec E_t) = Psi_K (x) ... (x) Psi_1.
TensorTimeSeries gen_noise(const Dims& dims, double psi, Index T, Rng& rng);

struct SimulatedData {
  TensorTimeSeries series;
  CpFactorModel truth;  // weights all equal to cfg.w, factors unnormalized
  SimConfig config;
};

SimulatedData gen_series(const SimConfig& cfg);

}  // namespace tfmcp
