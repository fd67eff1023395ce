#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "tfmcp/benchmark.hpp"
#include "tfmcp/error.hpp"

using namespace tfmcp;

namespace {

BenchmarkSpec small_spec() {
  BenchmarkSpec spec;
  spec.base = named_config("I", {.dims = Dims{10, 10}, .T = 150});
  spec.methods = {Method::CPCA, Method::HOPE};
  spec.sweep = SweepVariable::Delta;
  spec.grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  spec.replications = 20;
  spec.seed = 17;
  spec.timing = false;
  return spec;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) fields.push_back(std::exchange(cur, {}));
      else cur += c;
    }
    fields.push_back(cur);
    out.push_back(fields);
  }
  return out;
}

std::string rows_text(const BenchmarkResult& r) {
  std::ostringstream s;
  write_rows_csv(r.rows, s);
  return s.str();
}

std::string summary_text(const BenchmarkResult& r) {
  std::ostringstream s;
  write_summary_csv(r.summary, s);
  return s.str();
}

}  // namespace

TEST_SUITE("benchmark") {

TEST_CASE("delta sweep produces one row per method, value and replication") {
  const auto spec = small_spec();
  const auto res = run_benchmark(spec);
  REQUIRE(res.rows.size() == 2 * 6 * 20);
  // (method, sweep, replication) order
  CHECK(res.rows[0].method == Method::CPCA);
  CHECK(res.rows[19].replication == 19);
  CHECK(res.rows[20].sweep_value == 0.1);
  CHECK(res.rows[120].method == Method::HOPE);
  for (const auto& r : res.rows) {
    CHECK(r.status == "ok");
    CHECK(r.seconds == 0.0);
    CHECK(r.matched_error <= r.max_error + 1e-15);
  }
  CHECK(res.summary.size() == 12);
  REQUIRE(res.trend.size() == 2);
  CHECK(res.trend[0].method == Method::CPCA);

  auto table = parse_csv(rows_text(res));
  CHECK(table.size() == 241);
  CHECK(table[0] == std::vector<std::string>{"method", "sweep_value", "replication", "max_error",
                                             "matched_error", "iterations", "seconds", "status"});
}

TEST_CASE("same spec and seed give identical bytes") {
  auto spec = small_spec();
  spec.replications = 4;
  spec.grid = {0.0, 0.3};
  const auto a = run_benchmark(spec);
  spec.threads = 3;
  const auto b = run_benchmark(spec);
  CHECK(rows_text(a) == rows_text(b));
  CHECK(summary_text(a) == summary_text(b));
  spec.seed = 18;
  CHECK(rows_text(run_benchmark(spec)) != rows_text(a));
}

TEST_CASE("datasets are shared across methods") {
  auto spec = small_spec();
  spec.replications = 3;
  spec.grid = {0.2};
  spec.methods = {Method::HOPE, Method::HOPE};
  const auto res = run_benchmark(spec);
  for (int i = 0; i < 3; ++i) CHECK(res.rows[i].matched_error == res.rows[3 + i].matched_error);
  CHECK(dataset_seed(1, 0, 0) != dataset_seed(1, 0, 1));
  CHECK(dataset_seed(1, 0, 1) != dataset_seed(1, 1, 0));
}

TEST_CASE("summary medians match a recomputation from the row csv") {
  auto spec = small_spec();
  spec.replications = 7;
  spec.grid = {0.0, 0.25, 0.5};
  const auto res = run_benchmark(spec);
  auto rows = parse_csv(rows_text(res));
  auto summary = parse_csv(summary_text(res));

  std::map<std::pair<std::string, std::string>, std::vector<double>> matched, maxed;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    matched[{rows[i][0], rows[i][1]}].push_back(std::stod(rows[i][4]));
    maxed[{rows[i][0], rows[i][1]}].push_back(std::stod(rows[i][3]));
  }
  REQUIRE(summary.size() == 1 + matched.size());
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& s = summary[i];
    const auto& m = matched.at({s[0], s[1]});
    const auto& x = maxed.at({s[0], s[1]});
    CHECK(std::stoi(s[2]) == 7);
    CHECK(std::stoi(s[3]) == 0);
    CHECK(std::stod(s[4]) == doctest::Approx(oracle::quantile(m, 0.5)).epsilon(1e-14));
    CHECK(std::stod(s[5]) == doctest::Approx(oracle::quantile(m, 0.25)).epsilon(1e-14));
    CHECK(std::stod(s[6]) == doctest::Approx(oracle::quantile(m, 0.75)).epsilon(1e-14));
    CHECK(std::stod(s[7]) == doctest::Approx(oracle::quantile(x, 0.5)).epsilon(1e-14));
  }
}

TEST_CASE("trend is the least squares line of median cPCA error") {
  std::vector<SummaryRow> summary;
  const double xs[] = {0.1, 0.2, 0.3, 0.4};
  for (double x : xs) {
    SummaryRow s;
    s.method = Method::CPCA;
    s.sweep_value = x;
    s.median_matched = 0.05 + 0.5 * x;
    summary.push_back(s);
  }
  auto t = trends(summary);
  REQUIRE(t.size() == 1);
  CHECK(t[0].fit.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t[0].fit.intercept == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(t[0].fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  summary.resize(2);
  CHECK(trends(summary).empty());
}

TEST_CASE("failed fits become rows and the run continues") {
  std::vector<BenchmarkRow> rows(3);
  rows[1].status = "degenerate, \"bad\" data";
  rows[1].matched_error = rows[1].max_error = std::nan("");
  rows[0].matched_error = 0.1;
  rows[2].matched_error = 0.3;
  auto s = summarize(rows);
  REQUIRE(s.size() == 1);
  CHECK(s[0].n_ok == 2);
  CHECK(s[0].n_failed == 1);
  CHECK(s[0].median_matched == doctest::Approx(0.2));
  std::ostringstream out;
  write_rows_csv(rows, out);
  CHECK(out.str().find("\"degenerate, \"\"bad\"\" data\"") != std::string::npos);
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a\nb") == "\"a\nb\"");
}

TEST_CASE("benchmark spec json") {
  auto j = Json::parse(R"({
    "config": "I", "overrides": {"T": 200},
    "replications": 5, "methods": ["cPCA", "HOPE", "cOALS"],
    "sweep": {"variable": "w", "values": [2, 4, 6]},
    "seed": 9, "fit": {"h": 2, "restarts": 10}, "timing": false, "threads": 2})");
  auto spec = benchmark_spec_from_json(j);
  CHECK(spec.base.T == 200);
  CHECK(spec.base.dims == Dims{40, 40});
  CHECK(spec.replications == 5);
  CHECK(spec.methods.size() == 3);
  CHECK(spec.sweep == SweepVariable::W);
  CHECK(spec.config_at(4.0).w == 4.0);
  CHECK(spec.fit.h == 2);
  CHECK(spec.fit.restarts == 10);
  CHECK(!spec.timing);
  auto again = benchmark_spec_from_json(benchmark_spec_to_json(spec));
  CHECK(benchmark_spec_to_json(again) == benchmark_spec_to_json(spec));

  auto defaults = benchmark_spec_from_json(Json::parse(R"({"config":"II","sweep":{"variable":"T","values":[100]}})"));
  CHECK(defaults.replications == 20);
  CHECK(defaults.config_at(100).T == 100);

  CHECK_THROWS(benchmark_spec_from_json(Json::parse(R"({"config":"I","sweep":{"variable":"delta","values":[]}})")));
  CHECK_THROWS(benchmark_spec_from_json(
      Json::parse(R"({"config":"I","replications":0,"sweep":{"variable":"delta","values":[0]}})")));
  CHECK_THROWS(benchmark_spec_from_json(Json::parse(R"({"config":"I","sweep":{"variable":"psi","values":[0]}})")));
  CHECK_THROWS(benchmark_spec_from_json(
      Json::parse(R"({"config":"I","methods":["PCA"],"sweep":{"variable":"delta","values":[0]}})")));
}

}
