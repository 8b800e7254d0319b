#include <doctest.h>

#include <cmath>
#include <sstream>

#include "relmmd/experiments.hpp"
#include "relmmd/parallel.hpp"
#include "relmmd/report.hpp"

using namespace relmmd;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.gammas = {0.2, 0.5, 0.8};
  c.m = c.n = c.r = 40;
  c.repetitions = 6;
  c.seed = 1234;
  return c;
}

std::string sweep_text(const ExperimentConfig& c) {
  std::ostringstream out;
  write_sweep_csv(out, gamma_sweep(c));
  return out.str();
}

}  // namespace

TEST_CASE("ExperimentConfig validation") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  for (double g : {0.0, 1.0, -0.2, 1.5, std::nan("")}) {
    auto bad = small_config();
    bad.gammas = {g};
    CHECK_THROWS_AS(bad.validate(), Error);
  }
  auto unsorted = small_config();
  unsorted.gammas = {0.3, 0.3};
  CHECK_THROWS_AS(unsorted.validate(), Error);
  unsorted.gammas = {0.5, 0.4};
  CHECK_THROWS_AS(unsorted.validate(), Error);
  auto sizes = small_config();
  sizes.r = 2;
  CHECK_THROWS_AS(sizes.validate(), Error);
  auto dims = small_config();
  dims.mu_z = Eigen::Vector3d(1, 2, 3);
  CHECK_THROWS_AS(dims.validate(), Error);
  auto bw = small_config();
  bw.bandwidth = -1.0;
  CHECK_THROWS_AS(bw.validate(), Error);
  auto reps = small_config();
  reps.repetitions = 0;
  CHECK_THROWS_AS(reps.validate(), Error);
}

TEST_CASE("mu_x interpolates the candidate means") {
  const auto c = small_config();
  CHECK(c.mu_x(0.5).isApprox(Eigen::Vector2d(0, 0)));
  CHECK(c.mu_x(0.1).isApprox(Eigen::Vector2d(-4, -4)));
}

TEST_CASE("gamma grids") {
  const auto g = default_gamma_grid();
  REQUIRE(g.size() == 41);
  CHECK(g.front() == 0.1);
  CHECK(g.back() == 0.9);
  CHECK(g[20] == doctest::Approx(0.5).epsilon(1e-15));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] - g[i - 1] == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(linear_grid(0.3, 0.3, 1) == std::vector<double>{0.3});
  CHECK_THROWS_AS(linear_grid(0.1, 0.9, 0), Error);
}

TEST_CASE("draws are reproducible and independent across cells") {
  const auto c = small_config();
  const Draw a = draw_samples(c, 1, 3);
  const Draw b = draw_samples(c, 1, 3);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.z == b.z);
  CHECK(a.x.rows() == 40);
  CHECK(a.x.cols() == 2);
  CHECK(draw_samples(c, 1, 4).x != a.x);
  CHECK(draw_samples(c, 2, 3).y != a.y);
  auto other = c;
  other.seed = 1235;
  CHECK(draw_samples(other, 1, 3).x != a.x);
}

TEST_CASE("sample_gaussian moments") {
  Engine rng = make_stream(5, {9});
  const Eigen::VectorXd mean = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Eigen::Index count = 20000;
  const auto s = sample_gaussian(mean, count, rng);
  const Eigen::RowVectorXd avg = s.colwise().mean();
  // five standard errors of the mean
  CHECK((avg.transpose() - mean).cwiseAbs().maxCoeff() < 5.0 / std::sqrt(double(count)));
  const Eigen::MatrixXd centred = s.rowwise() - avg;
  const Eigen::MatrixXd cov = centred.transpose() * centred / double(count - 1);
  CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);

  Eigen::Matrix2d target;
  target << 2.0, 0.6, 0.6, 0.5;
  const Eigen::MatrixXd factor = Eigen::MatrixXd(target.llt().matrixL());
  Engine rng2 = make_stream(5, {10});
  const auto t = sample_gaussian(Eigen::VectorXd::Zero(2), factor, count, rng2);
  const Eigen::MatrixXd tc = t.transpose() * t / double(count);
  CHECK((tc - target).cwiseAbs().maxCoeff() < 0.06);
}

TEST_CASE("stream seeds depend only on the path") {
  CHECK(stream_seed(1, {2, 3}) == stream_seed(1, {2, 3}));
  CHECK(stream_seed(1, {2, 3}) != stream_seed(1, {3, 2}));
  CHECK(stream_seed(1, {2}) != stream_seed(1, {2, 0}));
  CHECK(stream_seed(1, {2, 3}) != stream_seed(2, {2, 3}));
}

TEST_CASE("gamma_sweep rows are consistent and reproducible") {
  const auto c = small_config();
  const auto report = gamma_sweep(c);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.rate_favor_z + row.rate_favor_y + row.rate_inconclusive == doctest::Approx(1.0));
    CHECK(row.mean_p >= 0.0);
    CHECK(row.mean_p <= 1.0);
    CHECK(row.mean_projected_sd > 0.0);
  }
  // X near Y favours Y, X near Z favours Z
  CHECK(report.rows.front().mean_p > 0.9);
  CHECK(report.rows.back().mean_p < 0.1);
  CHECK(sweep_text(c) == sweep_text(c));
}

TEST_CASE("sweep output does not depend on the worker count") {
  const auto c = small_config();
  const std::string reference = sweep_text(c);
  setenv("RELMMD_THREADS", "1", 1);
  CHECK(worker_count() == 1);
  const std::string serial = sweep_text(c);
  setenv("RELMMD_THREADS", "4", 1);
  const std::string wide = sweep_text(c);
  unsetenv("RELMMD_THREADS");
  CHECK(serial == reference);
  CHECK(wide == reference);
}

TEST_CASE("parallel_for fills every slot and reports the first failure") {
  std::vector<int> out(1000, -1);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = int(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i) * 2);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw Error(Errc::degenerate_data, "boom");
                  }),
                  Error);
}

TEST_CASE("sweep errors carry the gamma and repetition") {
  auto c = small_config();
  c.mu_y = Eigen::Vector2d(0, 0);
  c.mu_z = Eigen::Vector2d(0, 0);
  c.kernel = KernelFamily::gaussian_rbf;
  c.gammas = {0.5};
  c.repetitions = 1;
  // non-finite bandwidth is rejected before any draw
  c.bandwidth = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(gamma_sweep(c), Error);
}

TEST_CASE("power_comparison pairs joint and split on the same draws") {
  auto c = small_config();
  c.gammas = {0.6};
  const auto p = power_comparison(c);
  REQUIRE(p.joint.rows.size() == 1);
  REQUIRE(p.split.rows.size() == 1);
  const auto s = gamma_sweep(c);
  CHECK(p.joint.rows[0].mean_p == s.rows[0].mean_p);
  CHECK(p.split.rows[0].rate_favor_z + p.split.rows[0].rate_favor_y + p.split.rows[0].rate_inconclusive ==
        doctest::Approx(1.0));
  auto tiny = c;
  tiny.m = 5;
  CHECK_THROWS_AS(power_comparison(tiny), Error);
}

TEST_CASE("kolmogorov_survival reference values") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0494).epsilon(5e-3));
  CHECK(kolmogorov_survival(1.63) == doctest::Approx(0.0098).epsilon(1e-2));
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
  CHECK(kolmogorov_survival(5.0) < 1e-20);
}

TEST_CASE("ks_uniform on evenly spread and clustered values") {
  std::vector<double> even;
  for (int i = 0; i < 200; ++i) even.push_back((i + 0.5) / 200.0);
  const auto ok = ks_uniform(even);
  CHECK(ok.distance == doctest::Approx(0.0025));
  CHECK(ok.p_value > 0.99);
  std::vector<double> low(200, 0.1);
  const auto bad = ks_uniform(low);
  CHECK(bad.distance == doctest::Approx(0.9));
  CHECK(bad.p_value < 1e-10);
  CHECK_THROWS_AS(ks_uniform({}), Error);
}

TEST_CASE("geometry names round-trip") {
  for (auto g : {CalibrationGeometry::means, CalibrationGeometry::means_orientations,
                 CalibrationGeometry::orientations})
    CHECK(parse_geometry(to_string(g)) == g);
  CHECK_FALSE(parse_geometry("diagonal").has_value());
}

TEST_CASE("calibration geometries draw the intended covariances") {
  auto c = small_config();
  c.m = c.n = c.r = 20000;
  const Draw d = draw_calibration_samples(c, CalibrationGeometry::means_orientations, 0);
  auto cov = [](const SampleSet<double>& s) {
    const Eigen::MatrixXd centred = s.rowwise() - s.colwise().mean();
    return Eigen::MatrixXd(centred.transpose() * centred / double(s.rows() - 1));
  };
  Eigen::Matrix2d y_cov;
  y_cov << 2.125, 1.875, 1.875, 2.125;
  CHECK((cov(d.y) - y_cov).cwiseAbs().maxCoeff() < 0.15);
  // mirrored across the bisector of mu_y and mu_z = (-5,-5), (5,5)
  Eigen::Matrix2d z_cov;
  z_cov << 2.125, 1.875, 1.875, 2.125;
  CHECK((cov(d.z) - z_cov).cwiseAbs().maxCoeff() < 0.15);
  CHECK(Eigen::Vector2d(d.x.colwise().mean().transpose()).norm() < 0.05);

  const Draw o = draw_calibration_samples(c, CalibrationGeometry::orientations, 0);
  Eigen::Matrix2d neg;
  neg << 2.125, -1.875, -1.875, 2.125;
  CHECK((cov(o.y) - y_cov).cwiseAbs().maxCoeff() < 0.15);
  CHECK((cov(o.z) - neg).cwiseAbs().maxCoeff() < 0.15);
}

TEST_CASE("calibration_run emits one p-value per repetition") {
  auto c = small_config();
  c.repetitions = 30;
  for (auto g : {CalibrationGeometry::means, CalibrationGeometry::means_orientations,
                 CalibrationGeometry::orientations}) {
    const auto rep = calibration_run(c, g);
    CHECK(rep.p_values.size() == 30);
    CHECK(rep.alpha_grid.size() == 99);
    CHECK(rep.false_positive_rate.size() == 99);
    for (std::size_t i = 1; i < rep.false_positive_rate.size(); ++i)
      CHECK(rep.false_positive_rate[i] >= rep.false_positive_rate[i - 1]);
    CHECK(rep.ks.p_value >= 0.0);
  }
  auto three_d = c;
  three_d.mu_y = Eigen::Vector3d(0, 0, 0);
  three_d.mu_z = Eigen::Vector3d(1, 1, 1);
  CHECK_THROWS_AS(calibration_run(three_d, CalibrationGeometry::orientations), Error);
  CHECK_NOTHROW(calibration_run(three_d, CalibrationGeometry::means));
}

TEST_CASE("isocurve_validation summary") {
  auto c = small_config();
  c.gammas = {0.5};
  c.repetitions = 20;
  const auto rep = isocurve_validation(c);
  CHECK(rep.points.size() == 20);
  CHECK(rep.bandwidth > 0.0);
  CHECK(rep.fraction_inside >= 0.0);
  CHECK(rep.fraction_inside <= 1.0);
  CHECK(rep.monte_carlo(0, 1) == rep.monte_carlo(1, 0));
  CHECK(rep.mean_analytic(0, 0) > 0.0);
  auto fixed = c;
  fixed.bandwidth = 2.5;
  CHECK(isocurve_validation(fixed).bandwidth == 2.5);
  auto one = c;
  one.repetitions = 1;
  CHECK_THROWS_AS(isocurve_validation(one), Error);
}
