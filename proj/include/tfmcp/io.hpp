// File formats: the TTS1 binary series format, CSV matrix series and the
// JSON documents written by the command line tool.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "tfmcp/estimators.hpp"
#include "tfmcp/model.hpp"
#include "tfmcp/simulate.hpp"

namespace tfmcp {

using Json = nlohmann::json;

// TTS1 layout, all little-endian:
//   "TTS1" | u32 version=1 | u32 K | K x u32 dims | u64 T | T*d f64
// Slices are stored one after another, each in vec order.
inline constexpr std::uint32_t kSeriesVersion = 1;
inline constexpr std::uint64_t kDefaultSeriesBudget = std::uint64_t{8} << 30;  // bytes

/// Header size in bytes for an order-K series.
std::uint64_t series_header_bytes(std::size_t K);
std::uint64_t series_payload_bytes(const Dims& dims, std::uint64_t T);

void write_series(const TensorTimeSeries& x, std::ostream& out);
void write_series(const TensorTimeSeries& x, const std::filesystem::path& path);

/// Throws FormatError on a bad magic, unsupported version, truncated or
/// oversized payload, or when the payload exceeds `max_bytes`.
TensorTimeSeries read_series(std::istream& in, std::uint64_t max_bytes = kDefaultSeriesBudget);
TensorTimeSeries read_series(const std::filesystem::path& path,
                             std::uint64_t max_bytes = kDefaultSeriesBudget);

/// One record per time slice holding rows*cols values in vec order
/// (column-major). Errors carry 1-based line numbers.
TensorTimeSeries read_csv_matrix_series(std::istream& in, Index rows, Index cols);
TensorTimeSeries read_csv_matrix_series(const std::filesystem::path& path, Index rows, Index cols);
void write_csv_matrix_series(const TensorTimeSeries& x, std::ostream& out);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

Json matrix_columns_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_columns_from_json(const Json& j, Index rows);
Json matrix_rows_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_rows_from_json(const Json& j);

Json model_to_json(const CpFactorModel& model);
CpFactorModel model_from_json(const Json& j);

Json sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const Json& j);

Json fit_config_to_json(const FitConfig& cfg);

/// Result document of `tfmcp fit`. `seconds` is the only field that is not
/// a function of (series, method, config).
Json fit_result_to_json(const FitResult& fit, const TensorTimeSeries& x, const FitConfig& cfg,
                        std::optional<double> seconds = std::nullopt);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace tfmcp
