#include "tfmcp/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "tfmcp/error.hpp"

namespace tfmcp {

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::Delta: return "delta";
    case SweepVariable::W: return "w";
    case SweepVariable::T: return "T";
  }
  return "?";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "delta" || name == "Delta") return SweepVariable::Delta;
  if (name == "w" || name == "W") return SweepVariable::W;
  if (name == "T" || name == "t") return SweepVariable::T;
  throw DomainError("unknown sweep variable '" + name + "' (expected delta, w or T)");
}

void BenchmarkSpec::validate() const {
  if (replications < 1) throw DomainError("benchmark needs at least one replication");
  if (methods.empty()) throw DomainError("benchmark needs at least one method");
  if (grid.empty()) throw DomainError("benchmark sweep grid is empty");
  if (threads < 1) throw DomainError("benchmark needs at least one thread");
  for (double v : grid) config_at(v).validate();
  FitConfig f = fit;
  f.r = base.r;
  f.validate();
}

SimConfig BenchmarkSpec::config_at(double value) const {
  SimConfig cfg = base;
  switch (sweep) {
    case SweepVariable::Delta: cfg.delta = value; break;
    case SweepVariable::W: cfg.w = value; break;
    case SweepVariable::T:
      if (value != std::floor(value) || value < 2.0)
        throw DomainError("T sweep values must be integers >= 2");
      cfg.T = static_cast<Index>(value);
      break;
  }
  return cfg;
}

BenchmarkSpec benchmark_spec_from_json(const Json& j) {
  try {
    BenchmarkSpec spec;
    spec.fit.restarts = 200;
    const Json& config = j.at("config");
    if (config.is_string()) {
      Json named = j.value("overrides", Json::object());
      named["name"] = config.get<std::string>();
      spec.base = sim_config_from_json(named);
    } else {
      spec.base = sim_config_from_json(config);
    }
    spec.replications = j.value("replications", spec.replications);
    if (j.contains("methods")) {
      spec.methods.clear();
      for (const auto& m : j["methods"]) spec.methods.push_back(parse_method(m.get<std::string>()));
    }
    const Json& sweep = j.at("sweep");
    spec.sweep = parse_sweep_variable(sweep.at("variable").get<std::string>());
    spec.grid = sweep.at("values").get<std::vector<double>>();
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("fit")) {
      const Json& f = j["fit"];
      spec.fit.h = f.value("h", spec.fit.h);
      spec.fit.eps = f.value("eps", spec.fit.eps);
      spec.fit.max_iter = f.value("max_iter", spec.fit.max_iter);
      spec.fit.gram_floor = f.value("gram_floor", spec.fit.gram_floor);
      spec.fit.restarts = f.value("restarts", spec.fit.restarts);
    }
    spec.timing = j.value("timing", spec.timing);
    spec.threads = j.value("threads", spec.threads);
    spec.fit.r = spec.base.r;
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("benchmark spec: ") + e.what());
  }
}

Json benchmark_spec_to_json(const BenchmarkSpec& spec) {
  Json j;
  j["config"] = sim_config_to_json(spec.base);
  j["replications"] = spec.replications;
  j["methods"] = Json::array();
  for (Method m : spec.methods) j["methods"].push_back(to_string(m));
  j["sweep"] = {{"variable", to_string(spec.sweep)}, {"values", spec.grid}};
  j["seed"] = spec.seed;
  j["fit"] = {{"h", spec.fit.h},
              {"eps", spec.fit.eps},
              {"max_iter", spec.fit.max_iter},
              {"gram_floor", spec.fit.gram_floor},
              {"restarts", spec.fit.restarts}};
  j["timing"] = spec.timing;
  j["threads"] = spec.threads;
  return j;
}

std::uint64_t dataset_seed(std::uint64_t seed, std::size_t g, int rep) {
  return replication_seed(replication_seed(seed, g), static_cast<std::uint64_t>(rep));
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

BenchmarkRow failed_row(Method m, double value, int rep, const std::string& why) {
  BenchmarkRow row;
  row.method = m;
  row.sweep_value = value;
  row.replication = rep;
  row.max_error = std::numeric_limits<double>::quiet_NaN();
  row.matched_error = std::numeric_limits<double>::quiet_NaN();
  row.iterations = 0;
  row.status = why.empty() ? "error" : why;
  return row;
}

bool uses_cpca(Method m) { return m != Method::ALS && m != Method::OALS; }

// Fits every method on one simulated dataset.
std::vector<BenchmarkRow> run_dataset(const BenchmarkSpec& spec, std::size_t g, int rep) {
  const double value = spec.grid[g];
  std::vector<BenchmarkRow> out;
  SimConfig cfg = spec.config_at(value);
  cfg.seed = dataset_seed(spec.seed, g, rep);
  FitConfig fcfg = spec.fit;
  fcfg.r = cfg.r;
  fcfg.seed = cfg.seed;

  std::optional<SimulatedData> data;
  PreparedMoment prep;
  double moment_seconds = 0.0, cpca_seconds = 0.0;
  std::string prep_error;
  try {
    data = gen_series(cfg);
    auto t0 = Clock::now();
    prep.moment = lagged_cross_moment(data->series, fcfg.h);
    moment_seconds = since(t0);
    const bool need_cpca = std::any_of(spec.methods.begin(), spec.methods.end(), uses_cpca);
    if (need_cpca) {
      t0 = Clock::now();
      prep.cpca = cpca_init(prep.moment, fcfg.r, fcfg.eig);
      cpca_seconds = since(t0);
    }
  } catch (const std::exception& e) {
    prep_error = e.what();
  }

  for (Method m : spec.methods) {
    if (!prep_error.empty()) {
      out.push_back(failed_row(m, value, rep, prep_error));
      continue;
    }
    try {
      const auto t0 = Clock::now();
      FitResult fit = tfmcp::fit(data->series, m, fcfg, prep);
      const double secs = since(t0) + moment_seconds + (uses_cpca(m) ? cpca_seconds : 0.0);
      const ErrorReport rep_err = loading_error(fit.loadings, data->truth.loadings);
      BenchmarkRow row;
      row.method = m;
      row.sweep_value = value;
      row.replication = rep;
      row.max_error = rep_err.unmatched_max_error;
      row.matched_error = rep_err.max_error;
      row.iterations = fit.iterations;
      row.seconds = spec.timing ? secs : 0.0;
      out.push_back(std::move(row));
    } catch (const std::exception& e) {
      out.push_back(failed_row(m, value, rep, e.what()));
    }
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  const std::size_t G = spec.grid.size();
  const std::size_t R = static_cast<std::size_t>(spec.replications);
  const std::size_t jobs = G * R;
  std::vector<std::vector<BenchmarkRow>> slots(jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++)
      slots[job] = run_dataset(spec, job / R, static_cast<int>(job % R));
  };
  const int n_threads = std::min<int>(spec.threads, static_cast<int>(jobs));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  BenchmarkResult result;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi)
    for (std::size_t job = 0; job < jobs; ++job) result.rows.push_back(slots[job][mi]);
  result.summary = summarize(result.rows);
  if (spec.sweep == SweepVariable::Delta) result.trend = trends(result.summary);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRow>& rows) {
  struct Acc {
    SummaryRow row;
    std::vector<double> matched, max, iters, secs;
  };
  std::vector<Acc> groups;
  std::map<std::pair<int, double>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_pair(static_cast<int>(r.method), r.sweep_value);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.push_back(Acc{});
      groups.back().row.method = r.method;
      groups.back().row.sweep_value = r.sweep_value;
    }
    Acc& a = groups[it->second];
    if (r.status != "ok") {
      ++a.row.n_failed;
      continue;
    }
    ++a.row.n_ok;
    a.matched.push_back(r.matched_error);
    a.max.push_back(r.max_error);
    a.iters.push_back(static_cast<double>(r.iterations));
    a.secs.push_back(r.seconds);
  }
  std::vector<SummaryRow> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& a : groups) {
    SummaryRow s = a.row;
    const bool any = !a.matched.empty();
    s.median_matched = any ? median(a.matched) : nan;
    s.q1_matched = any ? quantile(a.matched, 0.25) : nan;
    s.q3_matched = any ? quantile(a.matched, 0.75) : nan;
    s.median_max = any ? median(a.max) : nan;
    s.q1_max = any ? quantile(a.max, 0.25) : nan;
    s.q3_max = any ? quantile(a.max, 0.75) : nan;
    s.median_iterations = any ? median(a.iters) : nan;
    s.median_seconds = any ? median(a.secs) : nan;
    out.push_back(s);
  }
  return out;
}

std::vector<TrendRow> trends(const std::vector<SummaryRow>& summary) {
  std::vector<Method> order;
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> pts;
  for (const auto& s : summary) {
    auto& p = pts[static_cast<int>(s.method)];
    if (p.first.empty()) order.push_back(s.method);
    if (std::isnan(s.median_matched)) continue;
    p.first.push_back(s.sweep_value);
    p.second.push_back(s.median_matched);
  }
  std::vector<TrendRow> out;
  for (Method m : order) {
    const auto& p = pts[static_cast<int>(m)];
    try {
      out.push_back(TrendRow{m, linear_fit_r2(p.first, p.second)});
    } catch (const DomainError&) {
      // fewer than three distinct grid points: no trend
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

namespace {

std::string num(double v) { return std::isnan(v) ? "NaN" : format_double(v); }

std::string secs(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_rows_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out) {
  out << "method,sweep_value,replication,max_error,matched_error,iterations,seconds,status\n";
  for (const auto& r : rows)
    out << to_string(r.method) << ',' << num(r.sweep_value) << ',' << r.replication << ','
        << num(r.max_error) << ',' << num(r.matched_error) << ',' << r.iterations << ','
        << secs(r.seconds) << ',' << csv_field(r.status) << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& out) {
  out << "method,sweep_value,n_ok,n_failed,median_matched_error,q1_matched_error,q3_matched_error,"
         "median_max_error,q1_max_error,q3_max_error,median_iterations,median_seconds\n";
  for (const auto& s : summary)
    out << to_string(s.method) << ',' << num(s.sweep_value) << ',' << s.n_ok << ',' << s.n_failed
        << ',' << num(s.median_matched) << ',' << num(s.q1_matched) << ',' << num(s.q3_matched)
        << ',' << num(s.median_max) << ',' << num(s.q1_max) << ',' << num(s.q3_max) << ','
        << num(s.median_iterations) << ',' << secs(s.median_seconds) << '\n';
}

void write_trend_csv(const std::vector<TrendRow>& trend, std::ostream& out) {
  out << "method,slope,intercept,r2\n";
  for (const auto& t : trend)
    out << to_string(t.method) << ',' << num(t.fit.slope) << ',' << num(t.fit.intercept) << ','
        << num(t.fit.r2) << '\n';
}

}  // namespace tfmcp
