// Monte Carlo benchmark: simulate, fit every method on the same data and
// tabulate loading errors per (method, sweep value, replication).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tfmcp/estimators.hpp"
#include "tfmcp/io.hpp"
#include "tfmcp/metrics.hpp"
#include "tfmcp/simulate.hpp"

namespace tfmcp {

enum class SweepVariable { Delta, W, T };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& name);

struct BenchmarkSpec {
  SimConfig base;
  int replications = 20;
  std::vector<Method> methods{Method::CPCA, Method::HOPE1, Method::HOPE, Method::CALS, Method::COALS};
  SweepVariable sweep = SweepVariable::Delta;
  std::vector<double> grid{0.0};
  std::uint64_t seed = 1;
  FitConfig fit;  // fit.r is overwritten with base.r; fit.seed per dataset
  bool timing = true;
  int threads = 1;

  void validate() const;
  /// base with the sweep variable set to `value`.
  SimConfig config_at(double value) const;
};

BenchmarkSpec benchmark_spec_from_json(const Json& j);
Json benchmark_spec_to_json(const BenchmarkSpec& spec);

/// Seed of the dataset for grid point g and replication rep.
std::uint64_t dataset_seed(std::uint64_t seed, std::size_t g, int rep);

struct BenchmarkRow {
  Method method = Method::HOPE;
  double sweep_value = 0.0;
  int replication = 0;
  double max_error = 0.0;      // identity labels
  double matched_error = 0.0;  // after label matching
  int iterations = 0;
  double seconds = 0.0;
  std::string status = "ok";
};

struct SummaryRow {
  Method method = Method::HOPE;
  double sweep_value = 0.0;
  int n_ok = 0;
  int n_failed = 0;
  double median_matched = 0.0, q1_matched = 0.0, q3_matched = 0.0;
  double median_max = 0.0, q1_max = 0.0, q3_max = 0.0;
  double median_iterations = 0.0;
  double median_seconds = 0.0;
};

struct TrendRow {
  Method method = Method::CPCA;
  LinearFit fit;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;  // (method, sweep, replication) order
  std::vector<SummaryRow> summary;
  std::vector<TrendRow> trend;     // median matched error vs delta; delta sweeps only
};

BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

/// Summary rows from raw rows (ok rows only), in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<BenchmarkRow>& rows);
std::vector<TrendRow> trends(const std::vector<SummaryRow>& summary);

void write_rows_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& out);
void write_trend_csv(const std::vector<TrendRow>& trend, std::ostream& out);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace tfmcp
