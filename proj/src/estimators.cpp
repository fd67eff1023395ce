#include "tfmcp/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

namespace tfmcp {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void check_series(const TensorTimeSeries& x, const FitConfig& cfg) {
  if (cfg.r > x.dim())
    throw DomainError("rank r=" + std::to_string(cfg.r) + " exceeds d=" + std::to_string(x.dim()));
  if (cfg.h >= x.length())
    throw DomainError("lag h=" + std::to_string(cfg.h) + " needs T > h (T=" +
                      std::to_string(x.length()) + ")");
}

void check_init(const TensorTimeSeries& x, const Loadings& init, Index r) {
  if (init.size() != x.order()) throw DimensionError("initial loadings: need one matrix per mode");
  for (std::size_t k = 0; k < init.size(); ++k) {
    if (init[k].rows() != x.dims()[k] || init[k].cols() != r)
      throw DimensionError("initial loadings: mode " + std::to_string(k) + " has wrong shape");
    for (Index i = 0; i < r; ++i)
      if (std::abs(init[k].col(i).norm() - 1.0) > 1e-8)
        throw DomainError("initial loadings must have unit-norm columns");
  }
}

std::vector<Eigen::VectorXd> columns(const Loadings& l, Index i) {
  std::vector<Eigen::VectorXd> out(l.size());
  for (std::size_t k = 0; k < l.size(); ++k) out[k] = l[k].col(i);
  return out;
}

// Top eigenvector of the symmetrized lag-h moment of a d_k x T vector series.
Eigen::VectorXd top_lagged_direction(const Eigen::MatrixXd& z, int h, const EigOptions& opt) {
  const Index n = z.cols() - h;
  Eigen::MatrixXd mom = z.leftCols(n) * z.rightCols(n).transpose() / static_cast<double>(n);
  Eigen::VectorXd v = sym_top_eigs(mom, 1, opt).vectors.col(0);
  sign_normalize_inplace(v);
  return v;
}

double max_change(const Loadings& a, const Loadings& prev) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (Index i = 0; i < a[k].cols(); ++i)
      worst = std::max(worst, projector_distance(a[k].col(i), prev[k].col(i)));
  return worst;
}

void warn_if_degenerate(FitResult& fit) {
  for (Index i = 0; i + 1 < fit.lambda_hat.size(); ++i)
    if (std::abs(fit.lambda_hat(i) - fit.lambda_hat(i + 1)) <= 1e-10) {
      fit.warnings.push_back("adjacent lambda_hat values " + std::to_string(i) + " and " +
                             std::to_string(i + 1) + " coincide; factor labels are not identified");
      return;
    }
}

void warn_if_overcomplete(const TensorTimeSeries& x, Index r, std::vector<std::string>& warnings) {
  const Index dmin = *std::min_element(x.dims().begin(), x.dims().end());
  if (r > dmin)
    warnings.push_back("r=" + std::to_string(r) + " exceeds the smallest mode size " +
                       std::to_string(dmin) + "; projections may be ill-conditioned");
}

void finish(const TensorTimeSeries& x, FitResult& fit, const FitConfig& cfg) {
  for (auto& a : fit.loadings)
    for (Index i = 0; i < a.cols(); ++i) {
      Eigen::VectorXd col = a.col(i);
      sign_normalize_inplace(col);
      a.col(i) = col;
    }
  emit_weights_and_factors(x, fit, cfg.gram_floor);
  warn_if_degenerate(fit);
}

// Contract a single K-tensor (given as its vec) on every mode except k.
Eigen::VectorXd contract_except(const Eigen::VectorXd& vec, const Dims& dims,
                                const std::vector<Eigen::VectorXd>& vectors, std::size_t k) {
  TensorTimeSeries one(dims, vec);
  return contract_series(one, k, vectors).col(0);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::CPCA: return "cPCA";
    case Method::HOPE1: return "1HOPE";
    case Method::HOPE: return "HOPE";
    case Method::CALS: return "cALS";
    case Method::COALS: return "cOALS";
    case Method::ALS: return "ALS";
    case Method::OALS: return "OALS";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::CPCA, Method::HOPE1, Method::HOPE, Method::CALS,
                                           Method::COALS, Method::ALS, Method::OALS};
  return methods;
}

Method parse_method(const std::string& name) {
  const std::string key = lower(name);
  for (Method m : all_methods())
    if (lower(to_string(m)) == key) return m;
  if (key == "hope1" || key == "one-step-hope") return Method::HOPE1;
  throw DomainError("unknown method '" + name + "'");
}

void FitConfig::validate() const {
  if (r < 1) throw DomainError("r must be at least 1");
  if (h < 1) throw DomainError("h must be at least 1");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (max_iter < 1) throw DomainError("max_iter must be at least 1");
  if (!(gram_floor > 0.0 && gram_floor < 1.0)) throw DomainError("gram_floor must lie in (0, 1)");
  if (restarts < 1) throw DomainError("restarts must be at least 1");
}

CpcaResult cpca_init(const LaggedMoment& moment, Index r, const EigOptions& opt) {
  const Index d = moment.square.rows();
  if (r < 1 || r > d) throw DomainError("cpca_init: r=" + std::to_string(r) + " outside 1..d");
  auto eig = sym_top_eigs(moment.square, r, opt);
  CpcaResult out;
  out.lambda_hat = eig.values;
  const std::size_t K = moment.dims.size();
  out.loadings.resize(K);
  for (std::size_t k = 0; k < K; ++k) out.loadings[k].resize(moment.dims[k], r);
  for (Index i = 0; i < r; ++i) {
    Tensor u(moment.dims, eig.vectors.col(i));
    for (std::size_t k = 0; k < K; ++k) out.loadings[k].col(i) = top_left_singular(unfold(u, k));
  }
  return out;
}

CpcaResult cpca_init(const TensorTimeSeries& x, Index r, int h, const EigOptions& opt) {
  return cpca_init(lagged_cross_moment(x, h), r, opt);
}

Eigen::MatrixXd project_z(const TensorTimeSeries& x, const std::vector<Eigen::VectorXd>& b_vectors,
                          std::size_t k) {
  return contract_series(x, k, b_vectors);
}

Eigen::MatrixXd project_z(const TensorTimeSeries& x, const ProjectionState& state, Index i,
                          std::size_t k) {
  return contract_series(x, k, columns(state.b_hat, i));
}

Eigen::MatrixXd projection_leakage(const CpFactorModel& truth, const ProjectionState& state,
                                   std::size_t k) {
  const Index r = truth.rank();
  const std::size_t K = truth.order();
  if (state.b_hat.size() != K) throw DimensionError("projection_leakage: state has wrong order");
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(r, r);
  for (std::size_t l = 0; l < K; ++l) {
    if (l == k) continue;
    // (a_jl^T b_il) for all i (rows), j (cols)
    xi.array() *= (state.b_hat[l].transpose() * truth.loadings[l]).array();
  }
  return xi;
}

void emit_weights_and_factors(const TensorTimeSeries& x, FitResult& fit, double gram_floor) {
  const Index r = fit.loadings.front().cols();
  Loadings b;
  for (const auto& a : fit.loadings) b.push_back(regularized_b(a, gram_floor));
  fit.weights.resize(r);
  fit.factors.resize(r, x.length());
  for (Index i = 0; i < r; ++i) {
    Eigen::VectorXd s = contract_series_all(x, columns(b, i));
    const double w = s.norm();
    fit.weights(i) = w;
    if (w > 0.0) {
      fit.factors.row(i) = (s / w).transpose();
    } else {
      fit.factors.row(i).setZero();
      fit.warnings.push_back("factor " + std::to_string(i) + " has zero projected signal");
    }
  }
}

Eigen::MatrixXd fitted_series(const FitResult& fit) {
  return vectorized_loadings(fit.loadings) * fit.weights.asDiagonal() * fit.factors;
}

CpFactorModel to_model(const FitResult& fit) {
  CpFactorModel m;
  m.dims = fit.dims;
  m.weights = fit.weights.cwiseMax(1e-300);
  m.loadings = fit.loadings;
  m.factors = fit.factors;
  return m;
}

FitResult iso_refine(const TensorTimeSeries& x, const Loadings& init, const FitConfig& cfg,
                     const IsoObserver& observer) {
  cfg.validate();
  check_series(x, cfg);
  check_init(x, init, cfg.r);
  const std::size_t K = x.order();
  const Index r = cfg.r;

  FitResult fit;
  fit.method = Method::HOPE;
  fit.dims = x.dims();
  warn_if_overcomplete(x, r, fit.warnings);

  ProjectionState state;
  state.a_hat = init;
  for (const auto& a : state.a_hat) state.b_hat.push_back(regularized_b(a, cfg.gram_floor));

  fit.converged = false;
  while (state.iteration < cfg.max_iter) {
    ++state.iteration;
    const Loadings prev = state.a_hat;
    for (std::size_t k = 0; k < K; ++k) {
      // Modes before k were refreshed this iteration; modes after k still
      // carry last iteration's projections.
      if (k > 0) state.b_hat[k - 1] = regularized_b(state.a_hat[k - 1], cfg.gram_floor);
      Eigen::MatrixXd updated(x.dims()[k], r);
      for (Index i = 0; i < r; ++i) {
        Eigen::MatrixXd z = project_z(x, state, i, k);
        updated.col(i) = top_lagged_direction(z, cfg.h, cfg.eig);
      }
      state.a_hat[k] = std::move(updated);
    }
    state.b_hat[K - 1] = regularized_b(state.a_hat[K - 1], cfg.gram_floor);
    const double change = max_change(state.a_hat, prev);
    fit.trace.push_back(change);
    if (observer) observer(state);
    if (change <= cfg.eps) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = state.iteration;
  fit.loadings = state.a_hat;
  finish(x, fit, cfg);
  return fit;
}

FitResult cpca_fit(const TensorTimeSeries& x, const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  auto init = cpca_init(x, cfg.r, cfg.h, cfg.eig);
  FitResult fit;
  fit.method = Method::CPCA;
  fit.dims = x.dims();
  fit.loadings = std::move(init.loadings);
  fit.lambda_hat = std::move(init.lambda_hat);
  fit.iterations = 0;
  fit.converged = true;
  finish(x, fit, cfg);
  return fit;
}

FitResult hope(const TensorTimeSeries& x, const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  auto init = cpca_init(x, cfg.r, cfg.h, cfg.eig);
  FitResult fit = iso_refine(x, init.loadings, cfg);
  fit.method = Method::HOPE;
  fit.lambda_hat = std::move(init.lambda_hat);
  warn_if_degenerate(fit);
  return fit;
}

FitResult one_step_hope(const TensorTimeSeries& x, const FitConfig& cfg) {
  FitConfig one = cfg;
  one.max_iter = 1;
  FitResult fit = hope(x, one);
  fit.method = Method::HOPE1;
  return fit;
}

Eigen::VectorXd cals_direction(const LaggedMoment& moment, const std::vector<Eigen::VectorXd>& first,
                               const std::vector<Eigen::VectorXd>& second, std::size_t k) {
  // Contract the first copy completely, then the second copy except mode k.
  Eigen::VectorXd u = outer_vec(first);
  if (u.size() != moment.raw.rows()) throw DimensionError("cals_direction: vector sizes");
  Eigen::VectorXd y = moment.raw.transpose() * u;
  return contract_except(y, moment.dims, second, k);
}

Eigen::MatrixXd coals_update(const LaggedMoment& moment, const Loadings& q, std::size_t k) {
  const Index r = q.front().cols();
  Eigen::MatrixXd out(moment.dims[k], r);
  for (Index j = 0; j < r; ++j) {
    auto cols = columns(q, j);
    Eigen::VectorXd v = moment.raw * outer_vec(cols);  // second copy contracted
    out.col(j) = contract_except(v, moment.dims, cols, k);
  }
  return out;
}

FitResult cals(const TensorTimeSeries& x, const LaggedMoment& moment, const Loadings& init,
               const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  check_init(x, init, cfg.r);
  const std::size_t K = x.order();
  const Index r = cfg.r;
  FitResult fit;
  fit.method = Method::CALS;
  fit.dims = x.dims();
  fit.loadings = init;
  fit.converged = true;
  for (Index i = 0; i < r; ++i) {
    auto vecs = columns(init, i);
    bool conv = false;
    int m = 0;
    while (m < cfg.max_iter) {
      ++m;
      const auto prev = vecs;
      for (std::size_t k = 0; k < K; ++k) {
        Eigen::VectorXd dir = cals_direction(moment, vecs, vecs, k);
        const double n = dir.norm();
        if (!(n > 0.0))
          throw DegenerateError("cALS: zero contraction for factor " + std::to_string(i) + ", mode " +
                                std::to_string(k));
        vecs[k] = dir / n;
      }
      double change = 0.0;
      for (std::size_t k = 0; k < K; ++k) change = std::max(change, projector_distance(vecs[k], prev[k]));
      if (static_cast<std::size_t>(m) > fit.trace.size()) fit.trace.push_back(change);
      else fit.trace[m - 1] = std::max(fit.trace[m - 1], change);
      if (change <= cfg.eps) {
        conv = true;
        break;
      }
    }
    for (std::size_t k = 0; k < K; ++k) fit.loadings[k].col(i) = vecs[k];
    fit.iterations = std::max(fit.iterations, m);
    fit.converged = fit.converged && conv;
  }
  finish(x, fit, cfg);
  return fit;
}

FitResult cals(const TensorTimeSeries& x, const Loadings& init, const FitConfig& cfg) {
  return cals(x, lagged_cross_moment(x, cfg.h), init, cfg);
}

FitResult coals(const TensorTimeSeries& x, const LaggedMoment& moment, const Loadings& init,
                const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  check_init(x, init, cfg.r);
  const std::size_t K = x.order();
  FitResult fit;
  fit.method = Method::COALS;
  fit.dims = x.dims();
  warn_if_overcomplete(x, cfg.r, fit.warnings);
  Loadings a = init;
  fit.converged = false;
  int m = 0;
  while (m < cfg.max_iter) {
    ++m;
    Loadings q;
    for (std::size_t k = 0; k < K; ++k) {
      try {
        q.push_back(qr_orthonormalize(a[k]));
      } catch (const DegenerateError&) {
        // Rank-deficient iterate: fall back to the completed Householder basis.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a[k]);
        q.push_back(qr.householderQ() * Eigen::MatrixXd::Identity(a[k].rows(), a[k].cols()));
        fit.warnings.push_back("cOALS: rank-deficient loadings on mode " + std::to_string(k) +
                               " at iteration " + std::to_string(m));
      }
    }
    Loadings next(K);
    for (std::size_t k = 0; k < K; ++k) {
      next[k] = coals_update(moment, q, k);
      for (Index i = 0; i < next[k].cols(); ++i) {
        const double n = next[k].col(i).norm();
        if (!(n > 0.0)) throw DegenerateError("cOALS: zero update column");
        next[k].col(i) /= n;
      }
    }
    const double change = max_change(next, a);
    a = std::move(next);
    fit.trace.push_back(change);
    if (change <= cfg.eps) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = m;
  fit.loadings = std::move(a);
  finish(x, fit, cfg);
  return fit;
}

FitResult coals(const TensorTimeSeries& x, const Loadings& init, const FitConfig& cfg) {
  return coals(x, lagged_cross_moment(x, cfg.h), init, cfg);
}

namespace {

Loadings random_loadings(const Dims& dims, Index r, std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), 0x414c53u};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> normal;
  Loadings out;
  for (Index d : dims) {
    Eigen::MatrixXd a(d, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < d; ++i) a(i, j) = normal(gen);
    a.colwise().normalize();
    out.push_back(std::move(a));
  }
  return out;
}

template <typename Runner>
FitResult best_of_random(const LaggedMoment& moment, const FitConfig& cfg, Method tag, Runner run) {
  FitResult best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < cfg.restarts; ++l) {
    FitResult candidate;
    try {
      candidate = run(moment, random_loadings(moment.dims, cfg.r, cfg.seed, l));
    } catch (const DegenerateError&) {
      continue;
    }
    Eigen::MatrixXd u = vectorized_loadings(candidate.loadings);
    Eigen::VectorXd fitted = (u.transpose() * moment.square * u).diagonal();
    const double score = fitted.sum();
    if (score > best_score) {
      best_score = score;
      candidate.lambda_hat = fitted;
      best = std::move(candidate);
    }
  }
  if (best.loadings.empty()) throw DegenerateError(to_string(tag) + ": every random start degenerated");
  // Order factors by fitted strength.
  std::vector<Index> order(static_cast<std::size_t>(cfg.r));
  for (Index i = 0; i < cfg.r; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return best.lambda_hat(a) > best.lambda_hat(b); });
  FitResult sorted = best;
  for (Index j = 0; j < cfg.r; ++j) {
    const Index i = order[j];
    for (std::size_t k = 0; k < sorted.loadings.size(); ++k)
      sorted.loadings[k].col(j) = best.loadings[k].col(i);
    sorted.weights(j) = best.weights(i);
    sorted.factors.row(j) = best.factors.row(i);
    sorted.lambda_hat(j) = best.lambda_hat(i);
  }
  sorted.method = tag;
  return sorted;
}

}  // namespace

FitResult als_random(const TensorTimeSeries& x, const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  return fit(x, Method::ALS, cfg, PreparedMoment{lagged_cross_moment(x, cfg.h), std::nullopt});
}

FitResult oals_random(const TensorTimeSeries& x, const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  return fit(x, Method::OALS, cfg, PreparedMoment{lagged_cross_moment(x, cfg.h), std::nullopt});
}

PreparedMoment prepare(const TensorTimeSeries& x, const FitConfig& cfg) {
  cfg.validate();
  check_series(x, cfg);
  PreparedMoment out{lagged_cross_moment(x, cfg.h), std::nullopt};
  out.cpca = cpca_init(out.moment, cfg.r, cfg.eig);
  return out;
}

FitResult fit(const TensorTimeSeries& x, Method method, const FitConfig& cfg,
              const PreparedMoment& prep) {
  cfg.validate();
  check_series(x, cfg);
  if (prep.moment.h != cfg.h || prep.moment.dims != x.dims())
    throw DimensionError("prepared moment does not match the series or lag");
  auto init = [&]() -> const CpcaResult& {
    if (!prep.cpca || prep.cpca->lambda_hat.size() != cfg.r)
      throw DomainError("prepared moment carries no rank-r initialization");
    return *prep.cpca;
  };
  FitResult out;
  switch (method) {
    case Method::CPCA:
      out.method = Method::CPCA;
      out.dims = x.dims();
      out.loadings = init().loadings;
      out.lambda_hat = init().lambda_hat;
      out.iterations = 0;
      out.converged = true;
      finish(x, out, cfg);
      return out;
    case Method::HOPE1:
    case Method::HOPE: {
      FitConfig c = cfg;
      if (method == Method::HOPE1) c.max_iter = 1;
      out = iso_refine(x, init().loadings, c);
      out.method = method;
      out.lambda_hat = init().lambda_hat;
      warn_if_degenerate(out);
      return out;
    }
    case Method::CALS:
    case Method::COALS:
      out = method == Method::CALS ? cals(x, prep.moment, init().loadings, cfg)
                                   : coals(x, prep.moment, init().loadings, cfg);
      out.lambda_hat = init().lambda_hat;
      warn_if_degenerate(out);
      return out;
    case Method::ALS:
      return best_of_random(prep.moment, cfg, Method::ALS,
                            [&](const LaggedMoment& mom, const Loadings& start) {
                              return cals(x, mom, start, cfg);
                            });
    case Method::OALS:
      return best_of_random(prep.moment, cfg, Method::OALS,
                            [&](const LaggedMoment& mom, const Loadings& start) {
                              return coals(x, mom, start, cfg);
                            });
  }
  throw DomainError("unknown method");
}

FitResult fit(const TensorTimeSeries& x, Method method, const FitConfig& cfg) {
  switch (method) {
    case Method::CPCA: return cpca_fit(x, cfg);
    case Method::HOPE1: return one_step_hope(x, cfg);
    case Method::HOPE: return hope(x, cfg);
    case Method::ALS: return als_random(x, cfg);
    case Method::OALS: return oals_random(x, cfg);
    default: return fit(x, method, cfg, prepare(x, cfg));
  }
}

}  // namespace tfmcp
