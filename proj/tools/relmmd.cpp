// relmmd: relative similarity test between two candidate samples and a
// reference sample, plus the synthetic studies that validate it.
//
// Exit status of `relmmd test`: 0 favor-z, 1 favor-y, 2 inconclusive.
// Other subcommands exit 0 on success. Errors, for every subcommand:
//   3 invalid command line or argument   4 file cannot be read or written
//   5 malformed CSV                      6 dimension mismatch
//   7 sample too small                   8 non-finite or degenerate data
//   9 internal error

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relmmd/csv.hpp"
#include "relmmd/error.hpp"
#include "relmmd/estimators.hpp"
#include "relmmd/experiments.hpp"
#include "relmmd/kernels.hpp"
#include "relmmd/random.hpp"
#include "relmmd/reltest.hpp"
#include "relmmd/report.hpp"

namespace {

using namespace relmmd;

constexpr int kExitUsage = 3;
constexpr int kExitIo = 4;
constexpr int kExitParse = 5;
constexpr int kExitDimension = 6;
constexpr int kExitTooSmall = 7;
constexpr int kExitNumeric = 8;
constexpr int kExitInternal = 9;

int exit_code(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
      return kExitUsage;
    case Errc::io_error:
      return kExitIo;
    case Errc::parse_error:
      return kExitParse;
    case Errc::dimension_mismatch:
      return kExitDimension;
    case Errc::sample_too_small:
      return kExitTooSmall;
    case Errc::non_finite:
    case Errc::degenerate_data:
      return kExitNumeric;
  }
  return kExitInternal;
}

std::vector<double> parse_reals(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw Error(Errc::invalid_argument, std::string(what) + " is empty");
  return out;
}

Eigen::VectorXd parse_vector(const std::string& text, const char* what) {
  const auto v = parse_reals(text, what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

/// "lo:hi:count" or an explicit comma list.
std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::stringstream ss(text);
    std::string lo, hi, count;
    std::getline(ss, lo, ':');
    std::getline(ss, hi, ':');
    std::getline(ss, count);
    try {
      return linear_grid(std::stod(lo), std::stod(hi), std::stoi(count));
    } catch (const std::logic_error&) {
      throw Error(Errc::invalid_argument, "gamma grid '" + text + "' is not of the form lo:hi:count");
    }
  }
  return parse_reals(text, "gamma list");
}

KernelFamily parse_kernel(const std::string& name) {
  if (name == "rbf") return KernelFamily::gaussian_rbf;
  if (name == "linear") return KernelFamily::linear;
  throw Error(Errc::invalid_argument, "unknown kernel '" + name + "' (expected rbf or linear)");
}

std::optional<double> parse_bandwidth(const std::string& text) {
  if (text == "median") return std::nullopt;
  try {
    std::size_t used = 0;
    const double bw = std::stod(text, &used);
    if (used == text.size() && bw > 0.0 && std::isfinite(bw)) return bw;
  } catch (const std::exception&) {
  }
  throw Error(Errc::invalid_argument, "bandwidth must be 'median' or a positive number, got '" + text + "'");
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, path + ": cannot open for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  if (!out.flush()) throw Error(Errc::io_error, path + ": write failed");
}

// ---------------------------------------------------------------------------

struct TestOptions {
  std::string ref, y, z;
  std::string kernel = "rbf";
  std::string bandwidth = "median";
  double alpha = 0.05;
  std::string format = "text";
  bool header = false;
};

int run_test(const TestOptions& o) {
  const auto format = parse_format(o.format);
  if (!format) throw Error(Errc::invalid_argument, "unknown format '" + o.format + "'");
  const KernelFamily family = parse_kernel(o.kernel);
  const std::optional<double> fixed = parse_bandwidth(o.bandwidth);

  const auto x = read_matrix_csv_file(o.ref, o.header);
  const auto y = read_matrix_csv_file(o.y, o.header);
  const auto z = read_matrix_csv_file(o.z, o.header);

  ResultDocument doc;
  doc.ref_path = o.ref;
  doc.y_path = o.y;
  doc.z_path = o.z;
  doc.m = x.rows();
  doc.n = y.rows();
  doc.r = z.rows();
  doc.dim = x.cols();
  doc.kernel = to_string(family);
  doc.alpha = o.alpha;

  // Dimension and size checks come before the bandwidth so that the
  // diagnostics name the real problem.
  if (y.cols() != x.cols() || z.cols() != x.cols()) {
    throw Error(Errc::dimension_mismatch, "feature dimensions differ: ref " + std::to_string(x.cols()) + ", y " +
                                              std::to_string(y.cols()) + ", z " + std::to_string(z.cols()));
  }
  if (std::min({x.rows(), y.rows(), z.rows()}) < 3) {
    throw Error(Errc::sample_too_small, "each sample needs at least 3 rows (got m = " + std::to_string(x.rows()) +
                                            ", n = " + std::to_string(y.rows()) + ", r = " +
                                            std::to_string(z.rows()) + ")");
  }

  KernelSpec<double> spec = KernelSpec<double>::linear();
  if (family == KernelFamily::gaussian_rbf) {
    doc.bandwidth = fixed ? *fixed : relative_bandwidth(x, y, z);
    doc.bandwidth_source = fixed ? "fixed" : "median";
    spec = KernelSpec<double>::gaussian_rbf(doc.bandwidth);
  } else {
    doc.bandwidth_source = "none";
  }

  const auto joint = joint_estimate(gram_bundle(spec, x, y, z));
  doc.result = relative_test(joint, o.alpha);
  doc.var_xy = joint.var_xy;
  doc.var_xz = joint.var_xz;
  doc.cov_xyxz = joint.cov_xyxz;
  doc.warnings = collect_warnings(joint, doc.result);
  write_result(std::cout, doc, *format);
  std::cout.flush();

  switch (doc.result.decision) {
    case Decision::favor_z:
      return 0;
    case Decision::favor_y:
      return 1;
    default:
      return 2;
  }
}

// ---------------------------------------------------------------------------

struct StudyOptions {
  std::string mu_y = "-5,-5";
  std::string mu_z = "5,5";
  std::string gammas = "0.1:0.9:41";
  Eigen::Index size = 500;
  Eigen::Index m = 0, n = 0, r = 0;
  int reps = 100;
  std::uint64_t seed = 0;
  std::string kernel = "rbf";
  std::string bandwidth = "median";
  double alpha = 0.05;
  std::string out;
};

void add_study_options(CLI::App* cmd, StudyOptions& o, bool with_grid) {
  cmd->add_option("--mu-y", o.mu_y, "mean of Y, comma separated (use --mu-y=-5,-5 for negatives)")
      ->capture_default_str();
  cmd->add_option("--mu-z", o.mu_z, "mean of Z, comma separated")->capture_default_str();
  if (with_grid) cmd->add_option("--gammas", o.gammas, "gamma grid: lo:hi:count or a comma list")->capture_default_str();
  cmd->add_option("--size", o.size, "rows per sample unless --m/--n/--r override")->capture_default_str();
  cmd->add_option("--m", o.m, "reference sample size");
  cmd->add_option("--n", o.n, "Y sample size");
  cmd->add_option("--r", o.r, "Z sample size");
  cmd->add_option("--reps", o.reps, "repetitions per gamma")->capture_default_str();
  cmd->add_option("--seed", o.seed, "root seed; every draw is a function of it")->required();
  cmd->add_option("--kernel", o.kernel, "rbf or linear")->capture_default_str();
  cmd->add_option("--bandwidth", o.bandwidth, "'median' (averaged cross-pair median distance) or a positive real")
      ->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "significance level")->capture_default_str();
  cmd->add_option("--out", o.out, "report file (CSV)")->required();
}

ExperimentConfig make_config(const StudyOptions& o) {
  ExperimentConfig c;
  c.mu_y = parse_vector(o.mu_y, "--mu-y");
  c.mu_z = parse_vector(o.mu_z, "--mu-z");
  c.gammas = parse_grid(o.gammas);
  c.m = o.m > 0 ? o.m : o.size;
  c.n = o.n > 0 ? o.n : o.size;
  c.r = o.r > 0 ? o.r : o.size;
  c.repetitions = o.reps;
  c.seed = o.seed;
  c.kernel = parse_kernel(o.kernel);
  c.bandwidth = parse_bandwidth(o.bandwidth);
  c.alpha = o.alpha;
  c.validate();
  return c;
}

template <typename Writer>
void write_report_file(const std::string& path, Writer writer) {
  auto out = open_output(path);
  writer(out);
  finish_output(out, path);
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string mean;
  Eigen::Index count = 500;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string out;
};

int run_generate(const GenerateOptions& o) {
  if (o.count < 1) throw Error(Errc::invalid_argument, "--count must be positive");
  Engine rng = make_stream(o.seed, {0xfeedULL, o.stream});
  write_matrix_csv_file(o.out, sample_gaussian(parse_vector(o.mean, "--mean"), o.count, rng));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative MMD similarity test: is Y or Z closer to the reference X?"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.footer(
      "rbf kernel: k(u,v) = exp(-|u-v|^2 / (2 h^2)) with bandwidth h in data units.\n"
      "Thread count: RELMMD_THREADS caps the worker threads used by the studies.");

  TestOptions test;
  auto* test_cmd = app.add_subcommand("test", "run the relative similarity test on three CSV samples");
  test_cmd->add_option("--ref", test.ref, "reference sample X (CSV, one row per observation)")->required();
  test_cmd->add_option("--y", test.y, "candidate sample Y")->required();
  test_cmd->add_option("--z", test.z, "candidate sample Z")->required();
  test_cmd->add_option("--kernel", test.kernel, "rbf or linear")->capture_default_str();
  test_cmd->add_option("--bandwidth", test.bandwidth,
                       "'median': mean of the X-Y and X-Z median cross-pair distances; or a positive real")
      ->capture_default_str();
  test_cmd->add_option("--alpha", test.alpha, "significance level in (0,1)")->capture_default_str();
  test_cmd->add_option("--format", test.format, "text, json or csv")->capture_default_str();
  test_cmd->add_flag("--header", test.header, "skip the first line of every input file");
  test_cmd->footer("exit status: 0 favor-z (Z closer), 1 favor-y (Y closer), 2 inconclusive, >2 error");

  StudyOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "p-values across a gamma sweep of three Gaussians");
  add_study_options(sweep_cmd, sweep, true);

  StudyOptions power;
  auto* power_cmd = app.add_subcommand("power", "joint test vs. split-reference baseline on paired draws");
  add_study_options(power_cmd, power, true);

  StudyOptions calib;
  std::string geometry = "means";
  std::string fpr_out;
  auto* calib_cmd = app.add_subcommand("calibrate", "p-values under the symmetric null (gamma = 0.5)");
  calib.reps = 200;
  add_study_options(calib_cmd, calib, false);
  calib_cmd->add_option("--geometry", geometry, "means, means-orientations or orientations")->capture_default_str();
  calib_cmd->add_option("--fpr-out", fpr_out, "also write the false-positive rate over an alpha grid");

  StudyOptions iso;
  double iso_gamma = 0.5;
  auto* iso_cmd = app.add_subcommand("isocurve", "scatter of MMD pairs against the analytic 2-sigma ellipse");
  iso.size = 1000;
  iso.reps = 200;
  add_study_options(iso_cmd, iso, false);
  iso_cmd->add_option("--gamma", iso_gamma, "interpolation weight of the reference mean")->capture_default_str();

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "write i.i.d. N(mean, I) samples as CSV");
  gen_cmd->add_option("--mean", gen.mean, "comma separated mean (use --mean=-5,-5 for negatives)")->required();
  gen_cmd->add_option("--count", gen.count, "number of rows")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "root seed")->required();
  gen_cmd->add_option("--stream", gen.stream, "sub-stream index, for independent files under one seed")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*test_cmd) return run_test(test);
    if (*gen_cmd) return run_generate(gen);
    if (*sweep_cmd) {
      const auto report = gamma_sweep(make_config(sweep));
      write_report_file(sweep.out, [&](std::ostream& out) { write_sweep_csv(out, report); });
    } else if (*power_cmd) {
      const auto report = power_comparison(make_config(power));
      write_report_file(power.out, [&](std::ostream& out) { write_power_csv(out, report); });
    } else if (*calib_cmd) {
      const auto g = parse_geometry(geometry);
      if (!g) throw Error(Errc::invalid_argument, "unknown geometry '" + geometry + "'");
      calib.gammas = "0.5";
      const auto report = calibration_run(make_config(calib), *g);
      write_report_file(calib.out, [&](std::ostream& out) { write_calibration_csv(out, report); });
      if (!fpr_out.empty())
        write_report_file(fpr_out, [&](std::ostream& out) { write_false_positive_csv(out, report); });
    } else if (*iso_cmd) {
      iso.gammas = std::to_string(iso_gamma);
      auto config = make_config(iso);
      config.gammas = {iso_gamma};
      const auto report = isocurve_validation(config);
      write_report_file(iso.out, [&](std::ostream& out) { write_isocurve_csv(out, report); });
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "relmmd: error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "relmmd: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
