// tfmcp: simulate, fit, lag-scan and benchmark from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
// JSON object {"error": {...}} on stderr.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tfmcp/benchmark.hpp"
#include "tfmcp/error.hpp"
#include "tfmcp/estimators.hpp"
#include "tfmcp/io.hpp"
#include "tfmcp/moments.hpp"
#include "tfmcp/simulate.hpp"

namespace fs = std::filesystem;
using namespace tfmcp;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

int report(const std::string& type, const std::string& message, int code) {
  Json j;
  j["error"] = {{"type", type}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << '\n';
  return s;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

enum class Format { Auto, Tts1, Csv };

TensorTimeSeries load_series(const std::string& path, Format format, Index rows, Index cols) {
  if (format == Format::Auto) format = fs::path(path).extension() == ".csv" ? Format::Csv : Format::Tts1;
  if (format == Format::Csv) {
    if (rows < 1 || cols < 1) throw DomainError("CSV input needs --rows and --cols");
    return read_csv_matrix_series(fs::path(path), rows, cols);
  }
  return read_series(fs::path(path));
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
  out << text;
}

struct InputOpts {
  std::string path;
  Format format = Format::Auto;
  Index rows = 0, cols = 0;

  void add(CLI::App* app) {
    app->add_option("--input,-i", path, "Series file (TTS1 or CSV)")->required()->check(CLI::ExistingFile);
    app->add_option("--format", format, "auto, tts1 or csv")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Format>{{"auto", Format::Auto}, {"tts1", Format::Tts1}, {"csv", Format::Csv}},
            CLI::ignore_case));
    app->add_option("--rows", rows, "CSV input: rows of each matrix slice")->check(CLI::PositiveNumber);
    app->add_option("--cols", cols, "CSV input: columns of each matrix slice")->check(CLI::PositiveNumber);
  }
  TensorTimeSeries load() const { return load_series(path, format, rows, cols); }
};

void warn_long_lag(int h, Index T) {
  if (4 * static_cast<Index>(h) > T)
    warn("lag h=" + std::to_string(h) + " exceeds T/4 (T=" + std::to_string(T) + "); moments are noisy");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation and simulation for CP-structured tensor factor models"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a series and its ground-truth model");
  std::string sim_config = "I", sim_out, sim_truth, sim_csv;
  SimOverrides ov;
  std::vector<Index> ov_dims;
  std::vector<double> ov_phi;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config,-c", sim_config, "Configuration I, II, III, IV, V or custom");
  sim->add_option("--out,-o", sim_out, "Series output (TTS1)")->required();
  sim->add_option("--truth", sim_truth, "Ground-truth model JSON output");
  sim->add_option("--csv", sim_csv, "Also write the series as CSV (K=2 only)");
  sim->add_option("--dims", ov_dims, "Mode sizes")->delimiter(',')->check(CLI::PositiveNumber);
  sim->add_option("--r", ov.r, "Number of factors")->check(CLI::PositiveNumber);
  sim->add_option("--T", ov.T, "Series length")->check(CLI::Range(Index{2}, Index{1} << 40));
  sim->add_option("--w", ov.w, "Signal weight")->check(CLI::NonNegativeNumber);
  sim->add_option("--delta", ov.delta, "Target coherence in [0,1)")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--phi", ov_phi, "AR(1) coefficients, one per factor")->delimiter(',');
  sim->add_option("--psi", ov.psi, "Noise correlation within each mode");
  sim->add_option("--sigma", ov.sigma, "Noise scale")->check(CLI::NonNegativeNumber);
  sim->add_option("--burn-in", ov.burn_in, "AR(1) burn-in steps")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sim_seed, "RNG seed (printed when omitted)");

  // fit
  auto* fitc = app.add_subcommand("fit", "Estimate loadings, weights and factors");
  fitc->set_help_flag("--help", "Print this help message and exit");
  InputOpts fit_in;
  fit_in.add(fitc);
  FitConfig fcfg;
  std::string method_name = "HOPE", fit_out;
  std::optional<std::uint64_t> fit_seed;
  fitc->add_option("--r", fcfg.r, "Number of factors")->required()->check(CLI::PositiveNumber);
  fitc->add_option("--h", fcfg.h, "Lag")->check(CLI::PositiveNumber);
  fitc->add_option("--method,-m", method_name, "cPCA, 1HOPE, HOPE, cALS, cOALS, ALS or OALS");
  fitc->add_option("--eps", fcfg.eps, "Convergence tolerance")->check(CLI::PositiveNumber);
  fitc->add_option("--max-iter", fcfg.max_iter, "Maximum iterations")->check(CLI::PositiveNumber);
  fitc->add_option("--gram-floor", fcfg.gram_floor, "Eigenvalue floor of the loading Gram")
      ->check(CLI::Range(0.0, 1.0));
  fitc->add_option("--restarts", fcfg.restarts, "Random starts for ALS/OALS")->check(CLI::PositiveNumber);
  fitc->add_option("--seed", fit_seed, "Seed for random starts (printed when omitted)");
  fitc->add_option("--out,-o", fit_out, "Result JSON (stdout when omitted)");

  // lag-scan
  auto* lag = app.add_subcommand("lag-scan", "Explained fraction of the lagged moment per lag");
  InputOpts lag_in;
  lag_in.add(lag);
  int h_max = 1;
  Index lag_r = 1;
  std::string lag_out;
  lag->add_option("--h-max", h_max, "Largest lag")->required()->check(CLI::PositiveNumber);
  lag->add_option("--r", lag_r, "Number of factors")->required()->check(CLI::PositiveNumber);
  lag->add_option("--out,-o", lag_out, "CSV output (stdout when omitted)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Monte Carlo comparison of estimators");
  std::string spec_path, out_dir = ".";
  std::optional<int> reps, threads;
  std::optional<std::uint64_t> bench_seed;
  bool no_timing = false;
  bench->add_option("--spec,-s", spec_path, "Benchmark spec JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out-dir,-o", out_dir, "Directory for rows.csv, summary.csv, trend.csv");
  bench->add_option("--replications", reps, "Override the spec's replication count")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Override the spec's seed");
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--no-timing", no_timing, "Write 0 in the seconds column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kUsageError);
  }

  try {
    if (*sim) {
      if (!ov_dims.empty()) ov.dims = Dims(ov_dims.begin(), ov_dims.end());
      if (!ov_phi.empty()) ov.ar_coeffs = Eigen::Map<Eigen::VectorXd>(ov_phi.data(), ov_phi.size());
      ov.seed = resolve_seed(sim_seed);
      SimConfig cfg;
      if (sim_config == "custom") {
        apply_overrides(cfg, ov);
      } else {
        cfg = named_config(sim_config, ov);
      }
      if (!ov.ar_coeffs && cfg.ar_coeffs.size() != cfg.r)
        throw DomainError("--r changes the number of factors; give matching --phi");
      const SimulatedData data = gen_series(cfg);
      write_series(data.series, fs::path(sim_out));
      if (!sim_truth.empty()) {
        Json truth = model_to_json(data.truth);
        truth["config"] = sim_config_to_json(cfg);
        write_json_file(truth, fs::path(sim_truth));
      }
      if (!sim_csv.empty()) {
        if (cfg.dims.size() != 2) throw DomainError("--csv needs a matrix (K=2) series");
        std::ofstream out(sim_csv, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + sim_csv + "' for writing");
        write_csv_matrix_series(data.series, out);
      }
      return 0;
    }

    if (*fitc) {
      const Method method = parse_method(method_name);
      fcfg.seed = resolve_seed(fit_seed);
      const TensorTimeSeries x = fit_in.load();
      warn_long_lag(fcfg.h, x.length());
      const auto t0 = std::chrono::steady_clock::now();
      const FitResult res = fit(x, method, fcfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (const auto& w : res.warnings) warn(w);
      if (!res.converged) warn(to_string(method) + " stopped at max-iter before reaching eps");
      emit(fit_result_to_json(res, x, fcfg, secs).dump(2) + "\n", fit_out);
      return 0;
    }

    if (*lag) {
      const TensorTimeSeries x = lag_in.load();
      if (h_max >= x.length()) throw DomainError("--h-max must be smaller than T");
      warn_long_lag(h_max, x.length());
      const LagScan scan = scan_lags(x, h_max, lag_r);
      std::string text = "h,explained_fraction,selected\n";
      for (std::size_t i = 0; i < scan.fractions.size(); ++i) {
        const int h = static_cast<int>(i) + 1;
        text += std::to_string(h) + "," + format_double(scan.fractions[i]) + "," +
                (h == scan.selected ? "1" : "0") + "\n";
      }
      emit(text, lag_out);
      return 0;
    }

    if (*bench) {
      BenchmarkSpec spec = benchmark_spec_from_json(read_json_file(fs::path(spec_path)));
      const Json raw = read_json_file(fs::path(spec_path));
      if (bench_seed) {
        spec.seed = *bench_seed;
      } else if (!raw.contains("seed")) {
        spec.seed = resolve_seed(std::nullopt);
      }
      if (reps) spec.replications = *reps;
      if (threads) spec.threads = *threads;
      if (no_timing) spec.timing = false;
      warn_long_lag(spec.fit.h, spec.base.T);

      const BenchmarkResult res = run_benchmark(spec);
      fs::create_directories(out_dir);
      auto open = [&](const char* name) {
        std::ofstream f(fs::path(out_dir) / name, std::ios::trunc | std::ios::binary);
        if (!f) throw std::runtime_error(std::string("cannot write ") + name + " in " + out_dir);
        return f;
      };
      {
        auto f = open("rows.csv");
        write_rows_csv(res.rows, f);
      }
      {
        auto f = open("summary.csv");
        write_summary_csv(res.summary, f);
      }
      if (spec.sweep == SweepVariable::Delta) {
        auto f = open("trend.csv");
        write_trend_csv(res.trend, f);
      }
      write_json_file(benchmark_spec_to_json(spec), fs::path(out_dir) / "spec.json");
      std::size_t failed = 0;
      for (const auto& r : res.rows) failed += r.status != "ok";
      if (failed) warn(std::to_string(failed) + " of " + std::to_string(res.rows.size()) + " fits failed");
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    return report("invalid_argument", e.what(), kUsageError);
  } catch (const FormatError& e) {
    return report("format", e.what(), kRuntimeFailure);
  } catch (const ConvergenceError& e) {
    return report("convergence", e.what(), kRuntimeFailure);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), kRuntimeFailure);
  }
  return kUsageError;
}
