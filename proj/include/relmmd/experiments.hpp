#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relmmd/estimators.hpp"
#include "relmmd/kernels.hpp"
#include "relmmd/random.hpp"
#include "relmmd/reltest.hpp"

namespace relmmd {

/// Synthetic study: X ~ N(mu_x, I), Y ~ N(mu_y, I), Z ~ N(mu_z, I) with
/// mu_x = (1 - gamma) mu_y + gamma mu_z.
struct ExperimentConfig {
  Eigen::VectorXd mu_y = Eigen::Vector2d(-5.0, -5.0);
  Eigen::VectorXd mu_z = Eigen::Vector2d(5.0, 5.0);
  std::vector<double> gammas;
  Eigen::Index m = 500;
  Eigen::Index n = 500;
  Eigen::Index r = 500;
  int repetitions = 100;
  std::uint64_t seed = 0;
  KernelFamily kernel = KernelFamily::gaussian_rbf;
  /// Fixed rbf bandwidth; empty selects the averaged median heuristic per draw.
  std::optional<double> bandwidth;
  double alpha = 0.05;

  Eigen::VectorXd mu_x(double gamma) const { return (1.0 - gamma) * mu_y + gamma * mu_z; }

  /// Throws Error(invalid_argument) on inconsistent settings, including
  /// gamma values outside the open interval (0, 1) or a non-increasing grid.
  void validate() const;
};

/// `count` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, int count);

/// The 41-point grid over [0.1, 0.9].
std::vector<double> default_gamma_grid();

struct SweepRow {
  double gamma = 0;
  double mean_p = 0;
  double rate_favor_z = 0;
  double rate_favor_y = 0;
  double rate_inconclusive = 0;
  double mean_statistic = 0;
  double mean_projected_sd = 0;
};

struct SweepReport {
  ExperimentConfig config;
  std::vector<SweepRow> rows;
};

/// One repetition's three samples.
struct Draw {
  SampleSet<double> x, y, z;
};

/// Samples for (gamma_index, repetition), reproducible from config.seed alone.
Draw draw_samples(const ExperimentConfig& config, std::size_t gamma_index, int repetition);

/// Kernel for one draw: the fixed bandwidth if configured, otherwise the
/// averaged median heuristic of the draw itself.
KernelSpec<double> kernel_for(const ExperimentConfig& config, const Draw& draw);

SweepReport gamma_sweep(const ExperimentConfig& config);

struct PowerReport {
  SweepReport joint;
  SweepReport split;
};

/// Joint test and split baseline on the same draws and bandwidths.
PowerReport power_comparison(const ExperimentConfig& config);

/// Null geometries with MMD(x,y) = MMD(x,z) by symmetry.
enum class CalibrationGeometry {
  /// Identity covariances, mu_x midway between mu_y and mu_z.
  means,
  /// Anisotropic Y and Z covariances that mirror each other across the
  /// bisector of mu_y and mu_z. Illustrative values: diag(4, 0.25) rotated
  /// by +45 degrees for Y. Two-dimensional only.
  means_orientations,
  /// All means at the origin; Y rotated +45 degrees, Z rotated -45 degrees.
  /// Two-dimensional only.
  orientations,
};

const char* to_string(CalibrationGeometry g);
std::optional<CalibrationGeometry> parse_geometry(const std::string& name);

struct KsResult {
  double distance = 0;
  double p_value = 0;
};

/// One-sample Kolmogorov-Smirnov test against U(0, 1), with the asymptotic
/// Kolmogorov distribution and Stephens' small-sample correction.
KsResult ks_uniform(std::vector<double> values);

/// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

struct CalibrationReport {
  ExperimentConfig config;
  CalibrationGeometry geometry = CalibrationGeometry::means;
  std::vector<double> p_values;
  KsResult ks;
  std::vector<double> alpha_grid;
  std::vector<double> false_positive_rate;  // fraction of p <= alpha
};

/// Draws at gamma = 0.5 for the chosen geometry. config.gammas is ignored.
Draw draw_calibration_samples(const ExperimentConfig& config, CalibrationGeometry geometry, int repetition);

CalibrationReport calibration_run(const ExperimentConfig& config,
                                  CalibrationGeometry geometry = CalibrationGeometry::means);

struct IsocurvePoint {
  double mmd_xy = 0;
  double mmd_xz = 0;
  double var_xy = 0;
  double var_xz = 0;
  double cov_xyxz = 0;
  double mahalanobis2 = 0;
};

struct IsocurveReport {
  ExperimentConfig config;
  double gamma = 0;
  double bandwidth = 0;
  std::vector<IsocurvePoint> points;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();          // Monte-Carlo mean of the pairs
  Eigen::Matrix2d mean_analytic = Eigen::Matrix2d::Zero();   // average of the per-draw estimates
  Eigen::Matrix2d monte_carlo = Eigen::Matrix2d::Zero();     // sample covariance of the pairs
  double fraction_inside = 0;                                // Mahalanobis^2 <= 4
};

/// Records (mmd_xy, mmd_xz) over repetitions at gamma = config.gammas.front()
/// and checks them against the per-draw analytic covariance. The bandwidth is
/// held fixed across repetitions: config.bandwidth, or the averaged median
/// heuristic of a separate pilot draw.
IsocurveReport isocurve_validation(const ExperimentConfig& config);

}  // namespace relmmd
