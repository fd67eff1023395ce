// Shared fixtures for the unit tests.
#pragma once

#include <Eigen/Dense>

#include <random>

#include "tfmcp/estimators.hpp"
#include "tfmcp/metrics.hpp"
#include "tfmcp/simulate.hpp"

namespace testutil {

using namespace tfmcp;

inline Eigen::VectorXd phis(Index r) {
  Eigen::VectorXd p(r);
  for (Index i = 0; i < r; ++i) p(i) = 0.8 - 0.1 * static_cast<double>(i);
  return p;
}

/// Noiseless CP series with decreasing AR(1) coefficients.
inline SimulatedData noiseless(const Dims& dims, Index r, double delta, Index T, std::uint64_t seed,
                               double w = 5.0) {
  SimConfig cfg;
  cfg.dims = dims;
  cfg.r = r;
  cfg.T = T;
  cfg.w = w;
  cfg.delta = delta;
  cfg.ar_coeffs = phis(r);
  cfg.psi = 0.0;
  cfg.sigma = 0.0;
  cfg.seed = seed;
  return gen_series(cfg);
}

inline SimulatedData noisy(const Dims& dims, Index r, double delta, Index T, double w, std::uint64_t seed,
                           double psi = 0.1) {
  SimConfig cfg;
  cfg.dims = dims;
  cfg.r = r;
  cfg.T = T;
  cfg.w = w;
  cfg.delta = delta;
  cfg.ar_coeffs = phis(r);
  cfg.psi = psi;
  cfg.seed = seed;
  return gen_series(cfg);
}

inline Loadings random_loadings(const Dims& dims, Index r, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Loadings out;
  for (Index d : dims) {
    Eigen::MatrixXd a(d, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < d; ++i) a(i, j) = nd(gen);
    a.colwise().normalize();
    out.push_back(a);
  }
  return out;
}

}  // namespace testutil
