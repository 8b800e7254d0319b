#include "relmmd/report.hpp"

#include <ostream>

#include "relmmd/csv.hpp"
#include "relmmd/error.hpp"

namespace relmmd {

namespace {

Decision parse_decision(const std::string& s) {
  if (s == "favor-z") return Decision::favor_z;
  if (s == "favor-y") return Decision::favor_y;
  if (s == "inconclusive") return Decision::inconclusive;
  throw Error(Errc::parse_error, "unknown decision '" + s + "'");
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void config_comment(std::ostream& out, const char* kind, const ExperimentConfig& config) {
  out << "# " << kToolName << ' ' << kind << " config: " << to_json(config).dump() << '\n';
}

std::string matrix_text(const Eigen::Matrix2d& s) {
  return "[[" + format_real(s(0, 0)) + ", " + format_real(s(0, 1)) + "], [" + format_real(s(1, 0)) + ", " +
         format_real(s(1, 1)) + "]]";
}

}  // namespace

std::optional<OutputFormat> parse_format(const std::string& name) {
  if (name == "text") return OutputFormat::text;
  if (name == "json") return OutputFormat::json;
  if (name == "csv") return OutputFormat::csv;
  return std::nullopt;
}

std::vector<std::string> collect_warnings(const JointMmdEstimate<double>& joint, const TestResult<double>& result) {
  std::vector<std::string> w;
  if (result.degenerate_variance) w.emplace_back("degenerate-variance");
  if (joint.variance_clipped) w.emplace_back("negative-variance-clipped");
  if (std::min({joint.m, joint.n, joint.r}) < kSmallSampleWarning) w.emplace_back("small-sample");
  return w;
}

nlohmann::json to_json(const ResultDocument& doc) {
  nlohmann::json j;
  j["tool"] = doc.tool;
  j["version"] = doc.version;
  j["inputs"] = {{"ref", doc.ref_path}, {"y", doc.y_path}, {"z", doc.z_path}, {"m", doc.m},
                 {"n", doc.n},          {"r", doc.r},        {"dim", doc.dim}};
  j["kernel"] = {{"family", doc.kernel}, {"bandwidth", doc.bandwidth}, {"bandwidth_source", doc.bandwidth_source}};
  j["alpha"] = doc.alpha;
  j["seed"] = doc.seed ? nlohmann::json(*doc.seed) : nlohmann::json(nullptr);
  j["estimate"] = {{"mmd_xy", doc.result.mmd_xy},
                   {"mmd_xz", doc.result.mmd_xz},
                   {"var_xy", doc.var_xy},
                   {"var_xz", doc.var_xz},
                   {"cov_xyxz", doc.cov_xyxz}};
  j["result"] = {{"statistic", doc.result.statistic},
                 {"projected_sd", doc.result.projected_sd},
                 {"p_value", doc.result.p_value},
                 {"decision", to_string(doc.result.decision)},
                 {"degenerate_variance", doc.result.degenerate_variance}};
  j["warnings"] = doc.warnings;
  return j;
}

ResultDocument result_from_json(const nlohmann::json& j) {
  try {
    ResultDocument doc;
    doc.tool = j.at("tool").get<std::string>();
    doc.version = j.at("version").get<std::string>();
    const auto& in = j.at("inputs");
    doc.ref_path = in.at("ref").get<std::string>();
    doc.y_path = in.at("y").get<std::string>();
    doc.z_path = in.at("z").get<std::string>();
    doc.m = in.at("m").get<Eigen::Index>();
    doc.n = in.at("n").get<Eigen::Index>();
    doc.r = in.at("r").get<Eigen::Index>();
    doc.dim = in.at("dim").get<Eigen::Index>();
    const auto& k = j.at("kernel");
    doc.kernel = k.at("family").get<std::string>();
    doc.bandwidth = k.at("bandwidth").get<double>();
    doc.bandwidth_source = k.at("bandwidth_source").get<std::string>();
    doc.alpha = j.at("alpha").get<double>();
    if (!j.at("seed").is_null()) doc.seed = j.at("seed").get<std::uint64_t>();
    const auto& e = j.at("estimate");
    doc.result.mmd_xy = e.at("mmd_xy").get<double>();
    doc.result.mmd_xz = e.at("mmd_xz").get<double>();
    doc.var_xy = e.at("var_xy").get<double>();
    doc.var_xz = e.at("var_xz").get<double>();
    doc.cov_xyxz = e.at("cov_xyxz").get<double>();
    const auto& r = j.at("result");
    doc.result.statistic = r.at("statistic").get<double>();
    doc.result.projected_sd = r.at("projected_sd").get<double>();
    doc.result.p_value = r.at("p_value").get<double>();
    doc.result.decision = parse_decision(r.at("decision").get<std::string>());
    doc.result.degenerate_variance = r.at("degenerate_variance").get<bool>();
    doc.result.alpha = doc.alpha;
    doc.warnings = j.at("warnings").get<std::vector<std::string>>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed result document: ") + e.what());
  }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2); }

void write_result(std::ostream& out, const ResultDocument& doc, OutputFormat format) {
  const auto& t = doc.result;
  switch (format) {
    case OutputFormat::json:
      out << dump_json(to_json(doc)) << '\n';
      break;
    case OutputFormat::csv:
      out << "m,n,r,dim,kernel,bandwidth,alpha,mmd_xy,mmd_xz,var_xy,var_xz,cov_xyxz,statistic,projected_sd,"
             "p_value,decision,degenerate_variance\n";
      out << doc.m << ',' << doc.n << ',' << doc.r << ',' << doc.dim << ',' << doc.kernel << ','
          << format_real(doc.bandwidth) << ',' << format_real(doc.alpha) << ',' << format_real(t.mmd_xy) << ','
          << format_real(t.mmd_xz) << ',' << format_real(doc.var_xy) << ',' << format_real(doc.var_xz) << ','
          << format_real(doc.cov_xyxz) << ',' << format_real(t.statistic) << ',' << format_real(t.projected_sd)
          << ',' << format_real(t.p_value) << ',' << to_string(t.decision) << ','
          << (t.degenerate_variance ? "true" : "false") << '\n';
      break;
    case OutputFormat::text:
      out << doc.tool << ' ' << doc.version << '\n'
          << "samples     X=" << doc.ref_path << " (m=" << doc.m << ")  Y=" << doc.y_path << " (n=" << doc.n
          << ")  Z=" << doc.z_path << " (r=" << doc.r << ")  dim=" << doc.dim << '\n'
          << "kernel      " << doc.kernel;
      if (doc.kernel == "rbf") out << "  bandwidth=" << format_real(doc.bandwidth) << " (" << doc.bandwidth_source << ')';
      out << '\n'
          << "MMD^2(X,Y)  " << format_real(t.mmd_xy) << "  var " << format_real(doc.var_xy) << '\n'
          << "MMD^2(X,Z)  " << format_real(t.mmd_xz) << "  var " << format_real(doc.var_xz) << '\n'
          << "covariance  " << format_real(doc.cov_xyxz) << '\n'
          << "statistic   " << format_real(t.statistic) << "  sd " << format_real(t.projected_sd) << '\n'
          << "p-value     " << format_real(t.p_value) << "  (alpha " << format_real(doc.alpha) << ")\n"
          << "decision    " << to_string(t.decision) << '\n';
      for (const auto& w : doc.warnings) out << "warning     " << w << '\n';
      break;
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["mu_y"] = vector_json(c.mu_y);
  j["mu_z"] = vector_json(c.mu_z);
  j["gammas"] = c.gammas;
  j["m"] = c.m;
  j["n"] = c.n;
  j["r"] = c.r;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  j["kernel"] = to_string(c.kernel);
  j["bandwidth"] = c.bandwidth ? nlohmann::json(*c.bandwidth) : nlohmann::json("median");
  j["alpha"] = c.alpha;
  return j;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  config_comment(out, "sweep", report.config);
  out << "gamma,mean_p,rate_favor_z,rate_favor_y,rate_inconclusive,mean_statistic,mean_projected_sd\n";
  for (const auto& row : report.rows) {
    out << format_real(row.gamma) << ',' << format_real(row.mean_p) << ',' << format_real(row.rate_favor_z) << ','
        << format_real(row.rate_favor_y) << ',' << format_real(row.rate_inconclusive) << ','
        << format_real(row.mean_statistic) << ',' << format_real(row.mean_projected_sd) << '\n';
  }
}

void write_power_csv(std::ostream& out, const PowerReport& report) {
  config_comment(out, "power", report.joint.config);
  out << "gamma,power_joint,power_split,mean_p_joint,mean_p_split,mean_sd_joint,mean_sd_split\n";
  for (std::size_t i = 0; i < report.joint.rows.size(); ++i) {
    const auto& a = report.joint.rows[i];
    const auto& b = report.split.rows[i];
    out << format_real(a.gamma) << ',' << format_real(a.rate_favor_z) << ',' << format_real(b.rate_favor_z) << ','
        << format_real(a.mean_p) << ',' << format_real(b.mean_p) << ',' << format_real(a.mean_projected_sd) << ','
        << format_real(b.mean_projected_sd) << '\n';
  }
}

void write_calibration_csv(std::ostream& out, const CalibrationReport& report) {
  config_comment(out, "calibrate", report.config);
  out << "# geometry: " << to_string(report.geometry) << '\n';
  out << "# ks_distance: " << format_real(report.ks.distance) << '\n';
  out << "# ks_p_value: " << format_real(report.ks.p_value) << '\n';
  for (std::size_t i = 0; i < report.alpha_grid.size(); ++i) {
    if (std::abs(report.alpha_grid[i] - report.config.alpha) < 1e-12) {
      out << "# false_positive_rate_at_alpha: " << format_real(report.false_positive_rate[i]) << '\n';
    }
  }
  out << "repetition,p_value\n";
  for (std::size_t i = 0; i < report.p_values.size(); ++i) out << i << ',' << format_real(report.p_values[i]) << '\n';
}

void write_false_positive_csv(std::ostream& out, const CalibrationReport& report) {
  config_comment(out, "calibrate", report.config);
  out << "alpha,false_positive_rate\n";
  for (std::size_t i = 0; i < report.alpha_grid.size(); ++i)
    out << format_real(report.alpha_grid[i]) << ',' << format_real(report.false_positive_rate[i]) << '\n';
}

void write_isocurve_csv(std::ostream& out, const IsocurveReport& report) {
  config_comment(out, "isocurve", report.config);
  out << "# gamma: " << format_real(report.gamma) << '\n';
  out << "# bandwidth: " << format_real(report.bandwidth) << '\n';
  out << "# center: [" << format_real(report.center(0)) << ", " << format_real(report.center(1)) << "]\n";
  out << "# mean_analytic_covariance: " << matrix_text(report.mean_analytic) << '\n';
  out << "# monte_carlo_covariance: " << matrix_text(report.monte_carlo) << '\n';
  out << "# fraction_inside_2sigma: " << format_real(report.fraction_inside) << '\n';
  out << "repetition,mmd_xy,mmd_xz,var_xy,var_xz,cov_xyxz,mahalanobis2\n";
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    out << i << ',' << format_real(p.mmd_xy) << ',' << format_real(p.mmd_xz) << ',' << format_real(p.var_xy) << ','
        << format_real(p.var_xz) << ',' << format_real(p.cov_xyxz) << ',' << format_real(p.mahalanobis2) << '\n';
  }
}

}  // namespace relmmd
