// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "tfmcp/benchmark.hpp"
#include "tfmcp/estimators.hpp"
#include "tfmcp/io.hpp"
#include "tfmcp/metrics.hpp"
#include "tfmcp/model.hpp"
#include "tfmcp/moments.hpp"
#include "tfmcp/simulate.hpp"

using namespace tfmcp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> problems;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    problems.push_back(what);
  }

  std::string text() const {
    std::string s = detail.str();
    for (const auto& p : problems) s += (s.empty() ? "" : "; ") + p;
    return s;
  }
};

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// median matched error per (method, sweep value)
std::map<std::pair<Method, double>, double> medians(const BenchmarkResult& res) {
  std::map<std::pair<Method, double>, double> out;
  for (const auto& s : res.summary) out[{s.method, s.sweep_value}] = s.median_matched;
  return out;
}

std::size_t failures(const BenchmarkResult& res) {
  std::size_t n = 0;
  for (const auto& r : res.rows) n += r.status != "ok";
  return n;
}

Eigen::VectorXd phis(Index r) {
  Eigen::VectorXd p(r);
  for (Index i = 0; i < r; ++i) p(i) = 0.8 - 0.1 * static_cast<double>(i);
  return p;
}

SimulatedData noiseless(const Dims& dims, Index r, double delta, std::uint64_t seed) {
  SimConfig cfg;
  cfg.dims = dims;
  cfg.r = r;
  cfg.T = 300;
  cfg.w = 5.0;
  cfg.delta = delta;
  cfg.ar_coeffs = phis(r);
  cfg.psi = 0.0;
  cfg.sigma = 0.0;
  cfg.seed = seed;
  return gen_series(cfg);
}

std::string rows_csv(const BenchmarkResult& res) {
  std::ostringstream s;
  write_rows_csv(res.rows, s);
  write_summary_csv(res.summary, s);
  write_trend_csv(res.trend, s);
  return s.str();
}

void criterion1(Outcome& o) {
  BenchmarkSpec spec;
  spec.base = named_config("I");
  spec.methods = {Method::CPCA, Method::HOPE};
  spec.grid = {0.1, 0.2, 0.3, 0.4, 0.5};
  spec.replications = 20;
  spec.seed = 20240101;
  spec.timing = false;
  spec.threads = threads();
  const auto res = run_benchmark(spec);
  o.require(failures(res) == 0, "failed fits");
  auto med = medians(res);
  std::vector<double> c;
  for (double d : spec.grid) c.push_back(med[{Method::CPCA, d}]);
  bool mono = true;
  for (std::size_t i = 1; i < c.size(); ++i) mono = mono && c[i] >= c[i - 1];
  const LinearFit fit = linear_fit_r2(spec.grid, c);
  const double h1 = med[{Method::HOPE, 0.1}], h5 = med[{Method::HOPE, 0.5}];
  o.detail << "cPCA medians " << fmt(c.front()) << ".." << fmt(c.back()) << " R2=" << fmt(fit.r2)
           << ", HOPE " << fmt(h1) << " -> " << fmt(h5);
  o.require(mono, "cPCA medians not nondecreasing");
  o.require(fit.r2 >= 0.90, "R2 below 0.90");
  o.require(h5 <= 2.0 * h1, "HOPE error more than doubled");
}

void criterion2(Outcome& o) {
  const std::vector<double> ws{3.0, 6.0, 12.0};
  const std::vector<Index> Ts{100, 400, 1600};
  std::map<std::pair<double, Index>, double> hope, cpca;
  std::size_t failed = 0;
  for (Index T : Ts) {
    BenchmarkSpec spec;
    spec.base = named_config("II", {.T = T});
    spec.methods = {Method::CPCA, Method::HOPE};
    spec.sweep = SweepVariable::W;
    spec.grid = ws;
    spec.replications = 10;
    spec.seed = 20240202 + static_cast<std::uint64_t>(T);
    spec.timing = false;
    spec.threads = threads();
    const auto res = run_benchmark(spec);
    failed += failures(res);
    for (const auto& s : res.summary)
      (s.method == Method::HOPE ? hope : cpca)[{s.sweep_value, T}] = s.median_matched;
  }
  o.require(failed == 0, "failed fits");
  for (Index T : Ts)
    for (std::size_t i = 1; i < ws.size(); ++i)
      if (!(hope[{ws[i], T}] < hope[{ws[i - 1], T}]))
        o.require(false, "HOPE not decreasing in w at T=" + std::to_string(T));
  for (double w : ws)
    for (std::size_t i = 1; i < Ts.size(); ++i)
      if (!(hope[{w, Ts[i]}] < hope[{w, Ts[i - 1]}]))
        o.require(false, "HOPE not decreasing in T at w=" + fmt(w));
  const double floor = cpca[{12.0, 1600}];
  o.detail << "HOPE " << fmt(hope[{3.0, 100}]) << " -> " << fmt(hope[{12.0, 1600}]) << ", cPCA floor "
             << fmt(floor);
  o.require(floor >= 0.04, "cPCA error at w=12, T=1600 is " + fmt(floor));
}

void criterion3(Outcome& o) {
  BenchmarkSpec spec;
  spec.base = named_config("III");
  spec.methods = {Method::CPCA, Method::HOPE1, Method::HOPE, Method::CALS, Method::COALS};
  spec.grid = {0.1, 0.3};
  spec.replications = 20;
  spec.seed = 20240303;
  spec.timing = false;
  spec.threads = threads();
  const auto res = run_benchmark(spec);
  o.require(failures(res) == 0, "failed fits");
  auto med = medians(res);
  for (double d : spec.grid) {
    const double hope = med[{Method::HOPE, d}], one = med[{Method::HOPE1, d}], cpca = med[{Method::CPCA, d}],
                 cals = med[{Method::CALS, d}], coals = med[{Method::COALS, d}];
    if (d != spec.grid.front()) o.detail << " | ";
    o.detail << "delta " << d << ": HOPE " << fmt(hope) << " 1HOPE " << fmt(one) << " cPCA " << fmt(cpca)
             << " cALS " << fmt(cals) << " cOALS " << fmt(coals);
    o.require(hope <= one && one <= cpca, "ordering HOPE <= 1HOPE <= cPCA fails at delta " + fmt(d));
    o.require(hope <= cals, "HOPE > cALS at delta " + fmt(d));
  }
}

void criterion4(Outcome& o) {
  double worst_hope = 0.0, worst_als = 0.0;
  int most_iter = 0;
  std::uint64_t seed = 400;
  for (Dims dims : {Dims{8, 7}, Dims{6, 5, 4}})
    for (Index r : {1, 3})
      for (double delta : {0.0, 0.3}) {
        const auto data = noiseless(dims, r, delta, ++seed);
        FitConfig cfg;
        cfg.r = r;
        cfg.eps = 1e-10;
        cfg.max_iter = 10;
        const FitResult h = hope(data.series, cfg);
        const double e = loading_error(h.loadings, data.truth.loadings).max_error;
        worst_hope = std::max(worst_hope, e);
        most_iter = std::max(most_iter, h.iterations);
        const std::string tag = " (K=" + std::to_string(dims.size()) + ", r=" + std::to_string(r) +
                                ", delta=" + fmt(delta) + ")";
        o.require(e < 1e-8, "HOPE error " + fmt(e) + tag);
        o.require(h.iterations <= 10, "HOPE used " + std::to_string(h.iterations) + " iterations" + tag);
        if (delta != 0.0) continue;
        FitConfig als = cfg;
        als.eps = 1e-13;
        als.max_iter = 500;
        for (Method m : {Method::CALS, Method::COALS}) {
          const FitResult f = fit(data.series, m, als);
          const double ea = loading_error(f.loadings, data.truth.loadings).max_error;
          worst_als = std::max(worst_als, ea);
          o.require(ea < 1e-8, to_string(m) + " error " + fmt(ea) + tag);
        }
      }
  o.detail << "HOPE worst " << fmt(worst_hope) << " in <= " << most_iter
           << " iterations, cALS/cOALS worst " << fmt(worst_als);
}

void criterion5(Outcome& o) {
  srand(505);
  double worst = 0.0;
  for (Dims dims : {Dims{2, 2}, Dims{3, 2}, Dims{3, 3}, Dims{2, 3, 2}, Dims{3, 3, 3}})
    for (Index T : {3, 5, 8}) {
      TensorTimeSeries x(dims, Eigen::MatrixXd::Random(numel(dims), T));
      for (int h = 1; h < T; ++h) {
        const double e = (lagged_cross_moment(x, h).raw - oracle::lagged_moment(x.values(), h)).cwiseAbs().maxCoeff();
        worst = std::max(worst, e);
      }
    }
  o.require(worst <= 1e-12, "lagged moment off by " + fmt(worst));

  double unf = 0.0, kr = 0.0;
  for (Dims dims : {Dims{2, 3}, Dims{3, 2, 2}, Dims{2, 3, 2, 2}}) {
    Tensor t = Tensor::Random(dims);
    std::vector<Eigen::VectorXd> a;
    for (Index d : dims) a.push_back(Eigen::VectorXd::Random(d));
    Tensor rank1 = outer<double>(a);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      unf = std::max(unf, (unfold(t, k) - oracle::unfold(t, k)).cwiseAbs().maxCoeff());
      std::vector<Eigen::MatrixXd> others;
      for (std::size_t l = 0; l < dims.size(); ++l)
        if (l != k) others.push_back(a[l]);
      const Eigen::MatrixXd rhs = a[k] * khatri_rao<double>(others).transpose();
      kr = std::max(kr, (unfold(rank1, k) - rhs).cwiseAbs().maxCoeff());
    }
  }
  o.require(unf <= 1e-12, "unfold off by " + fmt(unf));
  o.require(kr <= 1e-12, "Khatri-Rao identity off by " + fmt(kr));

  double eig = 0.0;
  std::mt19937_64 gen(55);
  std::normal_distribution<double> nd;
  for (Index n : {3, 10, 25, 50}) {
    Eigen::MatrixXd m(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) m(i, j) = nd(gen);
    m = (m + m.transpose()).eval() / 2.0;
    const auto ref = oracle::jacobi_eigen(m);
    const Index r = std::min<Index>(3, n);
    for (EigMethod how : {EigMethod::Dense, EigMethod::Subspace}) {
      EigOptions opt;
      opt.method = how;
      const auto got = sym_top_eigs(m, r, opt);
      for (Index i = 0; i < r; ++i) {
        eig = std::max(eig, std::abs(got.values(i) - ref.values(i)));
        eig = std::max(eig, projector_distance(got.vectors.col(i), ref.vectors.col(i)));
      }
    }
  }
  o.require(eig <= 1e-9, "eigenpairs off by " + fmt(eig));

  double bi = 0.0;
  for (int n = 0; n < 20; ++n) {
    Eigen::MatrixXd a(12, 4);
    for (Index j = 0; j < 4; ++j)
      for (Index i = 0; i < 12; ++i) a(i, j) = nd(gen);
    a.colwise().normalize();
    const Eigen::MatrixXd b = regularized_b(a, 0.01);
    bi = std::max(bi, (a.transpose() * b - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff());
  }
  o.require(bi <= 1e-10, "A^T B = I off by " + fmt(bi));
  o.detail << "moment " << fmt(worst) << ", unfold " << fmt(unf) << ", KR " << fmt(kr)
           << ", eig " << fmt(eig) << ", A^T B " << fmt(bi);
}

void criterion6(Outcome& o) {
  std::mt19937_64 gen(606);
  std::normal_distribution<double> nd;
  int violations = 0;
  for (int n = 0; n < 200; ++n) {
    const std::size_t K = 2 + n % 2;
    const Index r = 2 + (n / 2) % 5;
    Loadings a;
    for (std::size_t k = 0; k < K; ++k) {
      const Index d = r + static_cast<Index>(gen() % 8);
      Eigen::MatrixXd m(d, r);
      for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < d; ++i) m(i, j) = nd(gen);
      // mix in a shared direction on some draws so coherence is not tiny
      if (n % 3 == 0) m.colwise() += 0.8 * m.col(0);
      m.colwise().normalize();
      a.push_back(m);
    }
    const CoherenceReport rep = coherence_report(a);
    const double upper = std::pow(static_cast<double>(r), static_cast<double>(K) / 2.0 - 1.0);
    bool ok = rep.mu_star >= 1.0 - 1e-12 && rep.mu_star <= upper + 1e-12;
    for (const auto& b : check_prop1(rep)) ok = ok && b.holds;
    violations += !ok;
  }
  o.detail << violations << " of 200 loading sets violate a bound";
  o.require(violations == 0, "bound violated");
}

void criterion7(Outcome& o) {
  double worst_corr = 1.0, worst_norm = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    SimConfig cfg;
    cfg.dims = {20, 20};
    cfg.r = 2;
    cfg.T = 400;
    cfg.w = 20.0;
    cfg.delta = 0.1;
    cfg.psi = 0.0;
    cfg.ar_coeffs = phis(2);
    cfg.seed = replication_seed(707, static_cast<std::uint64_t>(rep));
    const auto data = gen_series(cfg);
    FitConfig fc;
    fc.r = 2;
    const FitResult f = hope(data.series, fc);
    worst_corr = std::min(worst_corr, factor_recovery(f, data.truth).minCoeff());
    for (Index i = 0; i < 2; ++i) worst_norm = std::max(worst_norm, std::abs(f.factors.row(i).squaredNorm() - 1.0));
  }
  o.detail << "min correlation " << fmt(worst_corr) << ", max |sum f^2 - 1| " << fmt(worst_norm);
  o.require(worst_corr >= 0.99, "correlation below 0.99");
  o.require(worst_norm <= 1e-8, "factor norm off");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion8(Outcome& o) {
  BenchmarkSpec spec;
  spec.base = named_config("I", {.dims = Dims{12, 12}, .T = 200});
  spec.methods = {Method::CPCA, Method::HOPE1, Method::HOPE, Method::CALS, Method::COALS, Method::ALS,
                  Method::OALS};
  spec.fit.restarts = 5;
  spec.grid = {0.0, 0.25, 0.5};
  spec.replications = 3;
  spec.seed = 808;
  spec.timing = false;
  const std::string first = rows_csv(run_benchmark(spec));
  spec.threads = std::max(2, threads());
  const std::string second = rows_csv(run_benchmark(spec));
  o.require(first == second, "benchmark CSV differs between runs");

  const auto dir = fs::temp_directory_path() / ("tfmcp_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto series = dir / "x.tts", out = dir / "fit.json";
  SimConfig cfg = named_config("II", {.dims = Dims{10, 9, 8}, .r = 2, .T = 150,
                                      .ar_coeffs = Eigen::VectorXd(Eigen::Vector2d(0.8, 0.6)), .seed = 88});
  const auto data = gen_series(cfg);
  write_series(data.series, series);
  const auto back = read_series(series);
  o.require(back.dims() == data.series.dims() &&
                std::memcmp(back.values().data(), data.series.values().data(),
                            sizeof(double) * data.series.values().size()) == 0,
            "TTS1 round trip not bit exact");

  std::size_t fields = 0;
  for (Method m : {Method::HOPE, Method::COALS, Method::OALS}) {
    const std::string cmd = std::string("\"") + TFMCP_CLI_PATH + "\" fit -i \"" + series.string() +
                            "\" --r 2 -m " + to_string(m) + " --restarts 3 --seed 5 --out \"" + out.string() +
                            "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      o.require(false, "CLI fit failed for " + to_string(m));
      continue;
    }
    Json got = Json::parse(slurp(out));
    got.erase("seconds");
    FitConfig fc;
    fc.r = 2;
    fc.restarts = 3;
    fc.seed = 5;
    const Json want = fit_result_to_json(fit(back, m, fc), back, fc);
    o.require(got == want, "CLI JSON differs from library for " + to_string(m));
    fields += want.size();
  }
  fs::remove_all(dir);
  o.detail << "benchmark bytes " << first.size() << " identical, TTS1 bit exact, "
           << fields << " JSON fields equal";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"configuration I delta sweep", criterion1},
      {"configuration II w/T trends", criterion2},
      {"method ordering, configuration III", criterion3},
      {"noiseless exactness", criterion4},
      {"oracle equivalence", criterion5},
      {"coherence inequalities", criterion6},
      {"factor recovery", criterion7},
      {"determinism and round trips", criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.text().c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
