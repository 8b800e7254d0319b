#include "relmmd/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "relmmd/error.hpp"

namespace relmmd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

SampleSet<double> read_matrix_csv(std::istream& in, bool header, const std::string& source) {
  std::vector<double> cells;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = header;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    Eigen::Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = trim(rest.substr(0, comma));
      // from_chars rejects an explicit plus sign
      const std::string_view digits = cell.starts_with('+') ? cell.substr(1) : cell;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (digits.empty() || digits.starts_with('-') != cell.starts_with('-') || ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(value)) {
        throw Error(Errc::parse_error, source + ":" + std::to_string(line_no) + ": field " +
                                           std::to_string(count + 1) + " is not a finite real: '" +
                                           std::string(cell) + "'");
      }
      cells.push_back(value);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(Errc::parse_error, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                                         " fields, found " + std::to_string(count));
    }
    ++rows;
  }
  if (in.bad()) throw Error(Errc::io_error, source + ": read failed");
  if (rows == 0) throw Error(Errc::parse_error, source + ": no data rows");
  return Eigen::Map<const SampleSet<double>>(cells.data(), rows, cols);
}

SampleSet<double> read_matrix_csv_file(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, path + ": cannot open for reading");
  return read_matrix_csv(in, header, path);
}

void write_matrix_csv(std::ostream& out, const SampleSet<double>& samples) {
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index k = 0; k < samples.cols(); ++k) {
      if (k) out << ',';
      out << format_real(samples(i, k));
    }
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const SampleSet<double>& samples) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, path + ": cannot open for writing");
  write_matrix_csv(out, samples);
  if (!out.flush()) throw Error(Errc::io_error, path + ": write failed");
}

}  // namespace relmmd
