#include "relmmd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "relmmd/parallel.hpp"

namespace relmmd {

namespace {

// First component of every stream path, so the experiments never share draws
// by accident.
enum StreamTag : std::uint64_t { kSweepDraw = 0, kCalibrationDraw = 1, kPilotDraw = 2, kSplitShuffle = 3 };

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_argument, what); }

Error with_context(const Error& e, double gamma, int repetition) {
  return Error(e.code(), "gamma = " + std::to_string(gamma) + ", repetition = " + std::to_string(repetition) +
                             ": " + e.what());
}

Eigen::Matrix2d rotation(double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  Eigen::Matrix2d rot;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return rot;
}

Eigen::Matrix2d oriented_covariance(double degrees) {
  const Eigen::Matrix2d rot = rotation(degrees);
  return rot * Eigen::Vector2d(4.0, 0.25).asDiagonal() * rot.transpose();
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov) { return cov.llt().matrixL(); }

SweepRow aggregate(double gamma, const std::vector<TestResult<double>>& results) {
  SweepRow row;
  row.gamma = gamma;
  const double count = double(results.size());
  for (const auto& t : results) {
    row.mean_p += t.p_value;
    row.mean_statistic += t.statistic;
    row.mean_projected_sd += t.projected_sd;
    row.rate_favor_z += t.decision == Decision::favor_z;
    row.rate_favor_y += t.decision == Decision::favor_y;
    row.rate_inconclusive += t.decision == Decision::inconclusive;
  }
  row.mean_p /= count;
  row.mean_statistic /= count;
  row.mean_projected_sd /= count;
  row.rate_favor_z /= count;
  row.rate_favor_y /= count;
  row.rate_inconclusive /= count;
  return row;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (mu_y.size() == 0 || mu_y.size() != mu_z.size()) invalid("mu_y and mu_z must be non-empty and equally sized");
  if (!mu_y.allFinite() || !mu_z.allFinite()) invalid("means must be finite");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double g = gammas[i];
    if (!(g > 0.0 && g < 1.0)) invalid("gamma must lie strictly inside (0, 1), got " + std::to_string(g));
    if (i > 0 && !(g > gammas[i - 1])) invalid("gamma grid must be strictly increasing");
  }
  if (m < 3 || n < 3 || r < 3) invalid("sample sizes m, n, r must each be at least 3");
  if (repetitions < 1) invalid("repetitions must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) invalid("alpha must lie in (0, 1)");
  if (bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth))) invalid("bandwidth must be positive");
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 1) invalid("grid needs at least one point");
  if (count == 1) return {lo};
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) grid[std::size_t(i)] = lo + (hi - lo) * double(i) / double(count - 1);
  grid.back() = hi;
  return grid;
}

std::vector<double> default_gamma_grid() { return linear_grid(0.1, 0.9, 41); }

Draw draw_samples(const ExperimentConfig& config, std::size_t gamma_index, int repetition) {
  Engine rng = make_stream(config.seed, {kSweepDraw, gamma_index, std::uint64_t(repetition)});
  Draw d;
  d.x = sample_gaussian(config.mu_x(config.gammas.at(gamma_index)), config.m, rng);
  d.y = sample_gaussian(config.mu_y, config.n, rng);
  d.z = sample_gaussian(config.mu_z, config.r, rng);
  return d;
}

KernelSpec<double> kernel_for(const ExperimentConfig& config, const Draw& draw) {
  if (config.kernel == KernelFamily::linear) return KernelSpec<double>::linear();
  if (config.bandwidth) return KernelSpec<double>::gaussian_rbf(*config.bandwidth);
  return KernelSpec<double>::gaussian_rbf(relative_bandwidth(draw.x, draw.y, draw.z));
}

namespace {

// Runs `trial(gamma_index, repetition)` over the whole grid and groups the
// results per gamma in repetition order.
template <typename Trial>
auto run_grid(const ExperimentConfig& config, Trial trial) {
  using Result = decltype(trial(std::size_t(0), 0));
  const std::size_t reps = std::size_t(config.repetitions);
  std::vector<Result> flat(config.gammas.size() * reps);
  parallel_for(flat.size(), [&](std::size_t task) {
    const std::size_t g = task / reps;
    const int rep = int(task % reps);
    try {
      flat[task] = trial(g, rep);
    } catch (const Error& e) {
      throw with_context(e, config.gammas[g], rep);
    }
  });
  return flat;
}

}  // namespace

SweepReport gamma_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto flat = run_grid(config, [&](std::size_t g, int rep) {
    const Draw d = draw_samples(config, g, rep);
    const auto bundle = gram_bundle(kernel_for(config, d), d.x, d.y, d.z);
    return relative_test(joint_estimate(bundle), config.alpha);
  });

  SweepReport report{config, {}};
  const std::size_t reps = std::size_t(config.repetitions);
  for (std::size_t g = 0; g < config.gammas.size(); ++g) {
    const std::vector<TestResult<double>> slice(flat.begin() + long(g * reps), flat.begin() + long((g + 1) * reps));
    report.rows.push_back(aggregate(config.gammas[g], slice));
  }
  return report;
}

PowerReport power_comparison(const ExperimentConfig& config) {
  config.validate();
  if (config.m < 6) invalid("power comparison needs m >= 6 to split the reference sample");
  using Pair = std::pair<TestResult<double>, TestResult<double>>;
  const auto flat = run_grid(config, [&](std::size_t g, int rep) -> Pair {
    const Draw d = draw_samples(config, g, rep);
    const KernelSpec<double> spec = kernel_for(config, d);
    const auto joint = relative_test(joint_estimate(gram_bundle(spec, d.x, d.y, d.z)), config.alpha);
    const auto split = split_test(d.x, d.y, d.z, spec, config.alpha,
                                  stream_seed(config.seed, {kSplitShuffle, g, std::uint64_t(rep)}));
    return {joint, split};
  });

  PowerReport report{{config, {}}, {config, {}}};
  const std::size_t reps = std::size_t(config.repetitions);
  for (std::size_t g = 0; g < config.gammas.size(); ++g) {
    std::vector<TestResult<double>> joint, split;
    for (std::size_t k = g * reps; k < (g + 1) * reps; ++k) {
      joint.push_back(flat[k].first);
      split.push_back(flat[k].second);
    }
    report.joint.rows.push_back(aggregate(config.gammas[g], joint));
    report.split.rows.push_back(aggregate(config.gammas[g], split));
  }
  return report;
}

const char* to_string(CalibrationGeometry g) {
  switch (g) {
    case CalibrationGeometry::means:
      return "means";
    case CalibrationGeometry::means_orientations:
      return "means-orientations";
    default:
      return "orientations";
  }
}

std::optional<CalibrationGeometry> parse_geometry(const std::string& name) {
  for (auto g : {CalibrationGeometry::means, CalibrationGeometry::means_orientations,
                 CalibrationGeometry::orientations}) {
    if (name == to_string(g)) return g;
  }
  return std::nullopt;
}

double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform(std::vector<double> values) {
  if (values.empty()) invalid("KS test needs at least one value");
  std::sort(values.begin(), values.end());
  const double count = double(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, double(i + 1) / count - u, u - double(i) / count});
  }
  const double root = std::sqrt(count);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

Draw draw_calibration_samples(const ExperimentConfig& config, CalibrationGeometry geometry, int repetition) {
  Engine rng = make_stream(config.seed, {kCalibrationDraw, std::uint64_t(geometry), std::uint64_t(repetition)});
  Draw d;
  switch (geometry) {
    case CalibrationGeometry::means:
      d.x = sample_gaussian(config.mu_x(0.5), config.m, rng);
      d.y = sample_gaussian(config.mu_y, config.n, rng);
      d.z = sample_gaussian(config.mu_z, config.r, rng);
      break;
    case CalibrationGeometry::means_orientations: {
      const Eigen::Vector2d axis = (config.mu_z - config.mu_y).normalized();
      const Eigen::Matrix2d mirror = Eigen::Matrix2d::Identity() - 2.0 * axis * axis.transpose();
      const Eigen::Matrix2d cov_y = oriented_covariance(45.0);
      d.x = sample_gaussian(config.mu_x(0.5), config.m, rng);
      d.y = sample_gaussian(config.mu_y, cholesky_factor(cov_y), config.n, rng);
      d.z = sample_gaussian(config.mu_z, cholesky_factor(mirror * cov_y * mirror), config.r, rng);
      break;
    }
    case CalibrationGeometry::orientations: {
      const Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
      d.x = sample_gaussian(origin, config.m, rng);
      d.y = sample_gaussian(origin, cholesky_factor(oriented_covariance(45.0)), config.n, rng);
      d.z = sample_gaussian(origin, cholesky_factor(oriented_covariance(-45.0)), config.r, rng);
      break;
    }
  }
  return d;
}

CalibrationReport calibration_run(const ExperimentConfig& config, CalibrationGeometry geometry) {
  ExperimentConfig cfg = config;
  cfg.gammas = {0.5};
  cfg.validate();
  if (geometry != CalibrationGeometry::means) {
    if (cfg.mu_y.size() != 2) invalid(std::string(to_string(geometry)) + " geometry is two-dimensional");
    if (geometry == CalibrationGeometry::means_orientations && (cfg.mu_z - cfg.mu_y).norm() == 0.0)
      invalid("means-orientations geometry needs mu_y != mu_z");
  }

  const auto flat = run_grid(cfg, [&](std::size_t, int rep) {
    const Draw d = draw_calibration_samples(cfg, geometry, rep);
    return relative_test(joint_estimate(gram_bundle(kernel_for(cfg, d), d.x, d.y, d.z)), cfg.alpha);
  });

  CalibrationReport report;
  report.config = cfg;
  report.geometry = geometry;
  for (const auto& t : flat) report.p_values.push_back(t.p_value);
  report.ks = ks_uniform(report.p_values);
  report.alpha_grid = linear_grid(0.01, 0.99, 99);
  for (double a : report.alpha_grid) {
    const auto hits = std::count_if(report.p_values.begin(), report.p_values.end(), [a](double p) { return p <= a; });
    report.false_positive_rate.push_back(double(hits) / double(report.p_values.size()));
  }
  return report;
}

IsocurveReport isocurve_validation(const ExperimentConfig& config) {
  config.validate();
  if (config.gammas.empty()) invalid("iso-curve validation needs one gamma value");
  if (config.repetitions < 2) invalid("iso-curve validation needs at least two repetitions");

  ExperimentConfig cfg = config;
  cfg.gammas = {config.gammas.front()};
  IsocurveReport report;
  report.gamma = cfg.gammas.front();
  if (cfg.kernel == KernelFamily::gaussian_rbf && !cfg.bandwidth) {
    Engine rng = make_stream(cfg.seed, {kPilotDraw});
    Draw pilot;
    pilot.x = sample_gaussian(cfg.mu_x(report.gamma), cfg.m, rng);
    pilot.y = sample_gaussian(cfg.mu_y, cfg.n, rng);
    pilot.z = sample_gaussian(cfg.mu_z, cfg.r, rng);
    cfg.bandwidth = relative_bandwidth(pilot.x, pilot.y, pilot.z);
  }
  report.bandwidth = cfg.kernel == KernelFamily::gaussian_rbf ? *cfg.bandwidth : 0.0;
  report.config = cfg;

  const auto flat = run_grid(cfg, [&](std::size_t g, int rep) {
    const Draw d = draw_samples(cfg, g, rep);
    const auto j = joint_estimate(gram_bundle(kernel_for(cfg, d), d.x, d.y, d.z));
    IsocurvePoint p;
    p.mmd_xy = j.mmd_xy.value;
    p.mmd_xz = j.mmd_xz.value;
    p.var_xy = j.var_xy;
    p.var_xz = j.var_xz;
    p.cov_xyxz = j.cov_xyxz;
    return p;
  });
  report.points = flat;

  const double count = double(flat.size());
  for (const auto& p : flat) {
    report.center += Eigen::Vector2d(p.mmd_xy, p.mmd_xz);
    Eigen::Matrix2d s;
    s << p.var_xy, p.cov_xyxz, p.cov_xyxz, p.var_xz;
    report.mean_analytic += s;
  }
  report.center /= count;
  report.mean_analytic /= count;

  std::size_t inside = 0;
  for (auto& p : report.points) {
    const Eigen::Vector2d dev = Eigen::Vector2d(p.mmd_xy, p.mmd_xz) - report.center;
    report.monte_carlo += dev * dev.transpose();
    Eigen::Matrix2d s;
    s << p.var_xy, p.cov_xyxz, p.cov_xyxz, p.var_xz;
    p.mahalanobis2 = dev.dot(s.ldlt().solve(dev));
    if (p.mahalanobis2 <= 4.0) ++inside;
  }
  report.monte_carlo /= count - 1.0;
  report.fraction_inside = double(inside) / count;
  return report;
}

}  // namespace relmmd
