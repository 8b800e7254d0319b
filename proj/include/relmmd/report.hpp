#pragma once

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "relmmd/experiments.hpp"
#include "relmmd/reltest.hpp"

namespace relmmd {

inline constexpr const char* kToolName = "relmmd";
inline constexpr const char* kToolVersion = "1.0.0";

/// Below this many rows in any sample the asymptotic normal approximation is
/// flagged with a "small-sample" warning.
inline constexpr Eigen::Index kSmallSampleWarning = 50;

enum class OutputFormat { text, json, csv };

std::optional<OutputFormat> parse_format(const std::string& name);

/// Everything `relmmd test` reports for one run.
struct ResultDocument {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string ref_path, y_path, z_path;
  Eigen::Index m = 0, n = 0, r = 0, dim = 0;
  std::string kernel;            // "rbf" | "linear"
  double bandwidth = 0;          // bandwidth actually used; 0 for linear
  std::string bandwidth_source;  // "median" | "fixed" | "none"
  double alpha = 0;
  std::optional<std::uint64_t> seed;
  double var_xy = 0, var_xz = 0, cov_xyxz = 0;
  TestResult<double> result;
  std::vector<std::string> warnings;
};

/// Assembles the warning list from the result flags and sample sizes.
std::vector<std::string> collect_warnings(const JointMmdEstimate<double>& joint, const TestResult<double>& result);

nlohmann::json to_json(const ResultDocument& doc);
ResultDocument result_from_json(const nlohmann::json& j);

/// Indented JSON text; doubles use the shortest form that reads back exactly.
std::string dump_json(const nlohmann::json& j);

void write_result(std::ostream& out, const ResultDocument& doc, OutputFormat format);

nlohmann::json to_json(const ExperimentConfig& config);

// Report files: comment lines starting with '#' (the first one carries the
// config echo as JSON), then a CSV header and data rows.
void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_power_csv(std::ostream& out, const PowerReport& report);
void write_calibration_csv(std::ostream& out, const CalibrationReport& report);
void write_false_positive_csv(std::ostream& out, const CalibrationReport& report);
void write_isocurve_csv(std::ostream& out, const IsocurveReport& report);

}  // namespace relmmd
