#include "tfmcp/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "tfmcp/error.hpp"
#include "tfmcp/metrics.hpp"

namespace tfmcp {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

constexpr std::array<char, 4> kMagic{'T', 'T', 'S', '1'};
constexpr std::uint32_t kMaxOrder = 64;

[[maybe_unused]] std::uint32_t bswap(std::uint32_t v) { return __builtin_bswap32(v); }
[[maybe_unused]] std::uint64_t bswap(std::uint64_t v) { return __builtin_bswap64(v); }

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) return bswap(v);
  return v;
}

template <typename U>
void put(std::ostream& out, U v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U get(std::istream& in, const char* what) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw FormatError(std::string("truncated TTS1 header while reading ") + what);
  return to_little(v);
}

bool mul_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return __builtin_mul_overflow(a, b, &out);
}

}  // namespace

std::uint64_t series_header_bytes(std::size_t K) { return 4 + 4 + 4 + 4 * K + 8; }

std::uint64_t series_payload_bytes(const Dims& dims, std::uint64_t T) {
  std::uint64_t n = 8;
  for (Index d : dims)
    if (mul_overflows(n, static_cast<std::uint64_t>(d), n))
      throw FormatError("series size overflows 64 bits");
  if (mul_overflows(n, T, n)) throw FormatError("series size overflows 64 bits");
  return n;
}

void write_series(const TensorTimeSeries& x, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kSeriesVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(x.order()));
  for (Index d : x.dims()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw FormatError("mode size too large for TTS1");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(x.length()));
  const double* p = x.values().data();
  const std::size_t n = static_cast<std::size_t>(x.values().size());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) put(out, std::bit_cast<std::uint64_t>(p[i]));
  }
  if (!out) throw std::runtime_error("write failed while writing series");
}

void write_series(const TensorTimeSeries& x, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_series(x, out);
}

TensorTimeSeries read_series(std::istream& in, std::uint64_t max_bytes) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) throw FormatError("truncated TTS1 header (magic)");
  if (magic != kMagic) throw FormatError("bad magic: not a TTS1 series file");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kSeriesVersion)
    throw FormatError("unsupported TTS1 version " + std::to_string(version));
  const auto K = get<std::uint32_t>(in, "order");
  if (K == 0 || K > kMaxOrder) throw FormatError("TTS1 order K=" + std::to_string(K) + " out of range");
  Dims dims(K);
  for (auto& d : dims) {
    d = static_cast<Index>(get<std::uint32_t>(in, "dims"));
    if (d == 0) throw FormatError("TTS1 mode size 0");
  }
  const auto T = get<std::uint64_t>(in, "T");
  if (T == 0) throw FormatError("TTS1 series with T=0");
  const std::uint64_t bytes = series_payload_bytes(dims, T);
  if (bytes > max_bytes)
    throw FormatError("TTS1 payload of " + std::to_string(bytes) + " bytes exceeds the budget of " +
                      std::to_string(max_bytes));

  Eigen::MatrixXd values(numel(dims), static_cast<Index>(T));
  char* dst = reinterpret_cast<char*>(values.data());
  if (!in.read(dst, static_cast<std::streamsize>(bytes)))
    throw FormatError("truncated TTS1 payload: expected " + std::to_string(bytes) + " bytes, got " +
                      std::to_string(in.gcount()));
  if constexpr (std::endian::native == std::endian::big) {
    for (Index i = 0; i < values.size(); ++i)
      values.data()[i] = std::bit_cast<double>(bswap(std::bit_cast<std::uint64_t>(values.data()[i])));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after TTS1 payload");
  return TensorTimeSeries(std::move(dims), std::move(values));
}

TensorTimeSeries read_series(const std::filesystem::path& path, std::uint64_t max_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_series(in, max_bytes);
}

// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

TensorTimeSeries read_csv_matrix_series(std::istream& in, Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw DomainError("CSV matrix series needs positive dims");
  const Index d = rows * cols;
  std::vector<double> data;
  std::string line;
  std::size_t lineno = 0;
  Index T = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::string_view rest(line);
    Index count = 0;
    while (true) {
      const auto comma = rest.find(',');
      std::string_view field = trim(rest.substr(0, comma));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw FormatError("line " + std::to_string(lineno) + ", field " + std::to_string(count + 1) +
                          ": cannot parse '" + std::string(field) + "' as a number");
      data.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != d)
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(d) +
                        " values, found " + std::to_string(count));
    ++T;
  }
  if (T == 0) throw FormatError("CSV matrix series is empty");
  Eigen::MatrixXd values = Eigen::Map<Eigen::MatrixXd>(data.data(), d, T);
  return TensorTimeSeries({rows, cols}, std::move(values));
}

TensorTimeSeries read_csv_matrix_series(const std::filesystem::path& path, Index rows, Index cols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_csv_matrix_series(in, rows, cols);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

void write_csv_matrix_series(const TensorTimeSeries& x, std::ostream& out) {
  for (Index t = 0; t < x.length(); ++t) {
    for (Index i = 0; i < x.dim(); ++i) {
      if (i) out << ',';
      out << format_double(x.values()(i, t));
    }
    out << '\n';
  }
}

// JSON

Json matrix_columns_to_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Index c = 0; c < m.cols(); ++c) {
    Json col = Json::array();
    for (Index r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
    j.push_back(std::move(col));
  }
  return j;
}

Eigen::MatrixXd matrix_columns_from_json(const Json& j, Index rows) {
  if (!j.is_array()) throw FormatError("expected an array of columns");
  Eigen::MatrixXd m(rows, static_cast<Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    if (!j[c].is_array() || static_cast<Index>(j[c].size()) != rows)
      throw FormatError("column " + std::to_string(c) + " has length != " + std::to_string(rows));
    for (Index r = 0; r < rows; ++r) m(r, static_cast<Index>(c)) = j[c][r].get<double>();
  }
  return m;
}

Json matrix_rows_to_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Eigen::MatrixXd matrix_rows_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Index>(j[r].size()) != cols)
      throw FormatError("ragged matrix at row " + std::to_string(r));
    for (Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

Dims dims_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("dims must be a nonempty array");
  Dims dims;
  for (const auto& d : j) {
    const auto v = d.get<std::int64_t>();
    if (v < 1) throw FormatError("dims entries must be positive");
    dims.push_back(static_cast<Index>(v));
  }
  return dims;
}

Json loadings_to_json(const Loadings& l) {
  Json j = Json::array();
  for (const auto& a : l) j.push_back(matrix_columns_to_json(a));
  return j;
}

Loadings loadings_from_json(const Json& j, const Dims& dims) {
  if (!j.is_array() || j.size() != dims.size()) throw FormatError("need one loading matrix per mode");
  Loadings l;
  for (std::size_t k = 0; k < dims.size(); ++k) l.push_back(matrix_columns_from_json(j[k], dims[k]));
  return l;
}

}  // namespace

Json model_to_json(const CpFactorModel& model) {
  Json j;
  j["dims"] = model.dims;
  j["rank"] = model.rank();
  j["weights"] = vector_to_json(model.weights);
  j["loadings"] = loadings_to_json(model.loadings);
  if (model.factors) j["factors"] = matrix_rows_to_json(*model.factors);
  return j;
}

CpFactorModel model_from_json(const Json& j) {
  try {
    CpFactorModel m;
    m.dims = dims_from_json(j.at("dims"));
    m.weights = vector_from_json(j.at("weights"));
    m.loadings = loadings_from_json(j.at("loadings"), m.dims);
    if (j.contains("factors")) m.factors = matrix_rows_from_json(j.at("factors"));
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("model JSON: ") + e.what());
  }
}

Json sim_config_to_json(const SimConfig& cfg) {
  Json j;
  j["name"] = cfg.name;
  j["dims"] = cfg.dims;
  j["r"] = cfg.r;
  j["T"] = cfg.T;
  j["w"] = cfg.w;
  j["delta"] = cfg.delta;
  j["ar_coeffs"] = vector_to_json(cfg.ar_coeffs);
  j["psi"] = cfg.psi;
  j["sigma"] = cfg.sigma;
  j["burn_in"] = cfg.burn_in;
  j["seed"] = cfg.seed;
  return j;
}

SimConfig sim_config_from_json(const Json& j) {
  try {
    SimOverrides o;
    if (j.contains("dims")) o.dims = dims_from_json(j["dims"]);
    if (j.contains("r")) o.r = j["r"].get<Index>();
    if (j.contains("T")) o.T = j["T"].get<Index>();
    if (j.contains("w")) o.w = j["w"].get<double>();
    if (j.contains("delta")) o.delta = j["delta"].get<double>();
    if (j.contains("ar_coeffs")) o.ar_coeffs = vector_from_json(j["ar_coeffs"]);
    if (j.contains("psi")) o.psi = j["psi"].get<double>();
    if (j.contains("sigma")) o.sigma = j["sigma"].get<double>();
    if (j.contains("burn_in")) o.burn_in = j["burn_in"].get<int>();
    if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    SimConfig cfg;
    if (j.contains("name") && j["name"].get<std::string>() != "custom") {
      cfg = named_config(j["name"].get<std::string>(), o);
    } else {
      apply_overrides(cfg, o);
    }
    return cfg;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("simulation config JSON: ") + e.what());
  }
}

Json fit_config_to_json(const FitConfig& cfg) {
  Json j;
  j["r"] = cfg.r;
  j["h"] = cfg.h;
  j["eps"] = cfg.eps;
  j["max_iter"] = cfg.max_iter;
  j["gram_floor"] = cfg.gram_floor;
  j["seed"] = cfg.seed;
  j["restarts"] = cfg.restarts;
  return j;
}

Json fit_result_to_json(const FitResult& fit, const TensorTimeSeries& x, const FitConfig& cfg,
                        std::optional<double> seconds) {
  Json j;
  j["method"] = to_string(fit.method);
  j["dims"] = fit.dims;
  j["T"] = x.length();
  j["config"] = fit_config_to_json(cfg);
  j["loadings"] = loadings_to_json(fit.loadings);
  j["weights"] = vector_to_json(fit.weights);
  j["factors"] = matrix_rows_to_json(fit.factors);
  j["lambda_hat"] = vector_to_json(fit.lambda_hat);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["trace"] = fit.trace;
  j["warnings"] = fit.warnings;
  j["explained_variability"] = explained_variability(x, fit);
  if (seconds) j["seconds"] = *seconds;
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace tfmcp
