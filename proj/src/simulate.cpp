#include "tfmcp/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "tfmcp/linalg.hpp"

namespace tfmcp {

Rng make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep) {
  // splitmix64 finalizer over seed ^ rep keeps neighbouring reps unrelated.
  std::uint64_t z = (seed ^ (rep * 0x9e3779b97f4a7c15ull)) + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void SimConfig::validate() const {
  if (dims.empty()) throw DomainError("simulation needs at least one mode");
  for (Index d : dims)
    if (d < 1) throw DomainError("simulation dims must be positive");
  if (r < 1) throw DomainError("simulation rank must be at least 1");
  for (Index d : dims)
    if (r > d) throw DomainError("simulation rank exceeds a mode size");
  if (T < 2) throw DomainError("simulation needs T >= 2");
  if (w < 0.0) throw DomainError("signal weight must be nonnegative");
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0, 1)");
  if (ar_coeffs.size() != r) throw DomainError("need one AR coefficient per factor");
  if ((ar_coeffs.array().abs() >= 1.0).any()) throw DomainError("AR coefficients must satisfy |phi| < 1");
  if (sigma < 0.0) throw DomainError("noise scale must be nonnegative");
  if (burn_in < 0) throw DomainError("burn-in must be nonnegative");
  for (Index d : dims) equicorrelation_sqrt(d, psi);
}

void apply_overrides(SimConfig& cfg, const SimOverrides& o) {
  if (o.dims) cfg.dims = *o.dims;
  if (o.r) cfg.r = *o.r;
  if (o.T) cfg.T = *o.T;
  if (o.w) cfg.w = *o.w;
  if (o.delta) cfg.delta = *o.delta;
  if (o.ar_coeffs) cfg.ar_coeffs = *o.ar_coeffs;
  if (o.psi) cfg.psi = *o.psi;
  if (o.sigma) cfg.sigma = *o.sigma;
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.seed) cfg.seed = *o.seed;
}

SimConfig named_config(const std::string& name, const SimOverrides& overrides) {
  std::string key = name;
  for (auto& c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const Eigen::VectorXd phi2 = Eigen::Vector2d(0.8, 0.6);
  const Eigen::VectorXd phi3 = Eigen::Vector3d(0.8, 0.7, 0.6);
  SimConfig cfg;
  cfg.name = key;
  if (key == "I") {
    cfg.dims = {40, 40}, cfg.r = 2, cfg.T = 400, cfg.w = 6.0, cfg.delta = 0.0, cfg.ar_coeffs = phi2;
  } else if (key == "II") {
    cfg.dims = {40, 40}, cfg.r = 2, cfg.T = 400, cfg.w = 6.0, cfg.delta = 0.2, cfg.ar_coeffs = phi2;
  } else if (key == "III") {
    cfg.dims = {40, 40}, cfg.r = 3, cfg.T = 400, cfg.w = 8.0, cfg.delta = 0.1, cfg.ar_coeffs = phi3;
  } else if (key == "IV") {
    cfg.dims = {40, 40}, cfg.r = 3, cfg.T = 400, cfg.w = 8.0, cfg.delta = 0.1, cfg.ar_coeffs = phi3;
  } else if (key == "V") {
    cfg.dims = {20, 20, 20}, cfg.r = 3, cfg.T = 400, cfg.w = 10.0, cfg.delta = 0.2, cfg.ar_coeffs = phi3;
  } else {
    throw DomainError("unknown configuration '" + name + "' (expected I, II, III, IV or V)");
  }
  apply_overrides(cfg, overrides);
  return cfg;
}

Loadings gen_loadings(const Dims& dims, Index r, double delta, Rng& rng) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("gen_loadings: delta must lie in [0, 1)");
  std::normal_distribution<double> normal;
  const double K = static_cast<double>(dims.size());
  Loadings out;
  for (Index d : dims) {
    if (r > d) throw DomainError("gen_loadings: r exceeds mode size");
    Eigen::MatrixXd g(d, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
    out.push_back(qr_orthonormalize(g));
  }
  if (delta == 0.0 || r < 2) return out;
  const double vartheta = delta / static_cast<double>(r - 1);
  const double theta = std::sqrt(std::pow(vartheta, -2.0 / K) - 1.0);
  for (auto& a : out) {
    const Eigen::VectorXd first = a.col(0);
    for (Index i = 1; i < r; ++i) {
      Eigen::VectorXd v = first + theta * a.col(i);
      a.col(i) = v / v.norm();
    }
  }
  return out;
}

Eigen::MatrixXd gen_ar1_factors(const Eigen::VectorXd& phis, Index T, Rng& rng, int burn_in) {
  std::normal_distribution<double> normal;
  const Index r = phis.size();
  Eigen::MatrixXd f(r, T);
  for (Index i = 0; i < r; ++i) {
    const double phi = phis(i);
    if (std::abs(phi) >= 1.0) throw DomainError("AR coefficient must satisfy |phi| < 1");
    double state = normal(rng) / std::sqrt(1.0 - phi * phi);
    for (int b = 0; b < burn_in; ++b) state = phi * state + normal(rng);
    for (Index t = 0; t < T; ++t) {
      state = phi * state + normal(rng);
      f(i, t) = state;
    }
  }
  return f;
}

Eigen::MatrixXd equicorrelation_sqrt(Index d, double psi) {
  // Eigenvalues 1 - psi (multiplicity d-1) and 1 + (d-1) psi.
  if (d > 1 && !(1.0 - psi > 0.0 && 1.0 + static_cast<double>(d - 1) * psi > 0.0))
    throw DomainError("noise correlation psi=" + std::to_string(psi) +
                      " gives a non positive definite covariance for mode size " + std::to_string(d));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(d, d, psi);
  cov.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  return es.operatorSqrt();
}

TensorTimeSeries gen_noise(const Dims& dims, double psi, Index T, Rng& rng) {
  std::normal_distribution<double> normal;
  const Index d = numel(dims);
  Eigen::MatrixXd z(d, T);
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < d; ++i) z(i, t) = normal(rng);
  if (psi == 0.0) return TensorTimeSeries(dims, std::move(z));
  TensorTimeSeries series(dims, std::move(z));
  Tensor all = series.as_tensor();
  for (std::size_t k = 0; k < dims.size(); ++k)
    all = mode_product(all, k, equicorrelation_sqrt(dims[k], psi));
  return TensorTimeSeries(dims, all.data().reshaped(d, T));
}

SimulatedData gen_series(const SimConfig& cfg) {
  cfg.validate();
  Rng load_rng = make_rng(cfg.seed, Stream::Loadings);
  Rng fac_rng = make_rng(cfg.seed, Stream::Factors);
  Rng noise_rng = make_rng(cfg.seed, Stream::Noise);

  CpFactorModel truth;
  truth.dims = cfg.dims;
  truth.weights = Eigen::VectorXd::Constant(cfg.r, cfg.w);
  truth.loadings = gen_loadings(cfg.dims, cfg.r, cfg.delta, load_rng);
  truth.factors = gen_ar1_factors(cfg.ar_coeffs, cfg.T, fac_rng, cfg.burn_in);

  Eigen::MatrixXd values = signal_series(truth);
  if (cfg.sigma > 0.0) values += cfg.sigma * gen_noise(cfg.dims, cfg.psi, cfg.T, noise_rng).values();
  return SimulatedData{TensorTimeSeries(cfg.dims, std::move(values)), std::move(truth), cfg};
}

}  // namespace tfmcp
