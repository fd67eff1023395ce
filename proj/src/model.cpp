#include "tfmcp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tfmcp/linalg.hpp"

namespace tfmcp {

void CpFactorModel::validate() const {
  const Index r = rank();
  if (loadings.size() != dims.size()) throw DimensionError("model: need one loading matrix per mode");
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (loadings[k].rows() != dims[k] || loadings[k].cols() != r)
      throw DimensionError("model: loading matrix " + std::to_string(k) + " has wrong shape");
    for (Index i = 0; i < r; ++i)
      if (std::abs(loadings[k].col(i).norm() - 1.0) > 1e-10)
        throw DomainError("model: loading columns must have unit norm");
  }
  if ((weights.array() <= 0.0).any()) throw DomainError("model: weights must be positive");
  if (factors && factors->rows() != r) throw DimensionError("model: factors must have r rows");
}

Eigen::MatrixXd vectorized_loadings(const Loadings& loadings) {
  return khatri_rao(loadings);
}

Tensor reconstruct(const CpFactorModel& model, Index t) {
  if (!model.factors) throw DomainError("reconstruct: model has no factor series");
  if (t < 0 || t >= model.factors->cols()) throw DomainError("reconstruct: time index out of range");
  Tensor out(model.dims);
  std::vector<Eigen::VectorXd> cols(model.order());
  for (Index i = 0; i < model.rank(); ++i) {
    for (std::size_t k = 0; k < model.order(); ++k) cols[k] = model.loadings[k].col(i);
    out.data() += model.weights(i) * (*model.factors)(i, t) * outer_vec(cols);
  }
  return out;
}

Eigen::MatrixXd signal_series(const CpFactorModel& model) {
  if (!model.factors) throw DomainError("signal_series: model has no factor series");
  return vectorized_loadings(model.loadings) * model.weights.asDiagonal() * (*model.factors);
}

double snr(const CpFactorModel& model, double sigma) {
  const double d = static_cast<double>(numel(model.dims));
  return model.weights.squaredNorm() / (sigma * sigma * d);
}

namespace {

double spectral_norm_sym(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .cwiseAbs()
      .maxCoeff();
}

double max_off_diagonal(const Eigen::MatrixXd& g) {
  double best = 0.0;
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < j; ++i) best = std::max(best, std::abs(g(i, j)));
  return best;
}

}  // namespace

CoherenceReport coherence_report(const Loadings& loadings) {
  const std::size_t K = loadings.size();
  if (K == 0) throw DimensionError("coherence_report: no loading matrices");
  const Index r = loadings.front().cols();
  CoherenceReport rep;
  rep.rank = r;
  rep.order = K;
  rep.theta_k = Eigen::VectorXd::Zero(static_cast<Index>(K));
  rep.delta_k = Eigen::VectorXd::Zero(static_cast<Index>(K));
  rep.eta.assign(K, Eigen::VectorXd::Zero(r));
  if (r < 2) return rep;

  std::vector<Eigen::MatrixXd> grams;
  Eigen::MatrixXd global = Eigen::MatrixXd::Ones(r, r);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(r, r);
  for (std::size_t k = 0; k < K; ++k) {
    if (loadings[k].cols() != r) throw DimensionError("coherence_report: rank differs across modes");
    Eigen::MatrixXd g = loadings[k].transpose() * loadings[k];
    rep.theta_k(k) = max_off_diagonal(g);
    rep.delta_k(k) = spectral_norm_sym(g - eye);
    Eigen::MatrixXd off = g;
    off.diagonal().setZero();
    rep.eta[k] = off.colwise().norm().transpose();
    global.array() *= g.array();
    grams.push_back(std::move(g));
  }
  rep.theta = max_off_diagonal(global);
  rep.delta = spectral_norm_sym(global - eye);

  // mu* = max_j min_{k1<k2} max_{i != j} prod_{k not in {k1,k2}} sqrt(r)|sigma_ij,k| / eta_jk,
  // with 0/0 read as 1. K = 2 leaves an empty product, so mu* = 1.
  rep.mu_star = 1.0;
  if (K >= 3) {
    const double sr = std::sqrt(static_cast<double>(r));
    auto ratio = [&](std::size_t k, Index i, Index j) {
      const double eta = rep.eta[k](j);
      return eta == 0.0 ? 1.0 : sr * std::abs(grams[k](i, j)) / eta;
    };
    double mu = 0.0;
    for (Index j = 0; j < r; ++j) {
      double best_pair = std::numeric_limits<double>::infinity();
      for (std::size_t k1 = 0; k1 < K; ++k1)
        for (std::size_t k2 = k1 + 1; k2 < K; ++k2) {
          double worst_i = 0.0;
          for (Index i = 0; i < r; ++i) {
            if (i == j) continue;
            double p = 1.0;
            for (std::size_t k = 0; k < K; ++k)
              if (k != k1 && k != k2) p *= ratio(k, i, j);
            worst_i = std::max(worst_i, p);
          }
          best_pair = std::min(best_pair, worst_i);
        }
      mu = std::max(mu, best_pair);
    }
    rep.mu_star = mu;
  }
  return rep;
}

std::vector<BoundCheck> check_prop1(const CoherenceReport& rep) {
  const double r = static_cast<double>(rep.rank);
  const double K = static_cast<double>(rep.order);
  auto make = [](std::string name, double lhs, double rhs) {
    const double slack = 1e-12 * std::max(1.0, std::abs(rhs));
    return BoundCheck{std::move(name), lhs, rhs, lhs <= rhs + slack};
  };
  std::vector<BoundCheck> out;
  out.push_back(make("delta <= min_k delta_k", rep.delta,
                     rep.delta_k.size() ? rep.delta_k.minCoeff() : 0.0));
  out.push_back(make("delta <= (r-1) theta", rep.delta, (r - 1.0) * rep.theta));
  out.push_back(make("theta <= prod_k theta_k", rep.theta, rep.theta_k.prod()));
  out.push_back(make("delta <= mu* r^(1-K/2) prod_k delta_k", rep.delta,
                     rep.mu_star * std::pow(r, 1.0 - K / 2.0) * rep.delta_k.prod()));
  return out;
}

double eigengap(const Eigen::VectorXd& lambda) {
  const Index r = lambda.size();
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < r; ++i) {
    if (i > 0) gap = std::min(gap, lambda(i - 1) - lambda(i));
    const double next = i + 1 < r ? lambda(i + 1) : 0.0;
    gap = std::min(gap, lambda(i) - next);
  }
  return gap;
}

ModelDiagnostics diagnostics(const CpFactorModel& model, int h, double sigma,
                             const std::optional<Eigen::VectorXd>& ar_coeffs) {
  const Index r = model.rank();
  ModelDiagnostics out;
  out.lambda.resize(r);
  if (ar_coeffs) {
    if (ar_coeffs->size() != r) throw DimensionError("diagnostics: need one AR coefficient per factor");
    for (Index i = 0; i < r; ++i) {
      const double phi = (*ar_coeffs)(i);
      out.lambda(i) = model.weights(i) * model.weights(i) * std::pow(phi, h) / (1.0 - phi * phi);
    }
  } else {
    if (!model.factors) throw DomainError("diagnostics: need factors or AR coefficients");
    const Eigen::MatrixXd& f = *model.factors;
    const Index T = f.cols();
    if (h < 1 || h >= T) throw DomainError("diagnostics: lag out of range");
    for (Index i = 0; i < r; ++i) {
      const double acov = f.row(i).head(T - h).dot(f.row(i).tail(T - h)) / static_cast<double>(T - h);
      out.lambda(i) = model.weights(i) * model.weights(i) * acov;
    }
  }
  out.lambda_star = eigengap(out.lambda);
  out.snr = snr(model, sigma);
  return out;
}

}  // namespace tfmcp
