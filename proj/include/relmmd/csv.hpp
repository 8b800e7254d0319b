#pragma once

#include <iosfwd>
#include <string>

#include "relmmd/kernels.hpp"

namespace relmmd {

/// Shortest decimal text that reads back to the same double ("%.17g").
std::string format_real(double value);

/// Comma-separated rows of decimal reals, one observation per row. Blank lines
/// are skipped; with `header` the first non-blank line is discarded. Errors
/// name `source` and the 1-based line number.
SampleSet<double> read_matrix_csv(std::istream& in, bool header, const std::string& source = "<stream>");
SampleSet<double> read_matrix_csv_file(const std::string& path, bool header);

void write_matrix_csv(std::ostream& out, const SampleSet<double>& samples);
void write_matrix_csv_file(const std::string& path, const SampleSet<double>& samples);

}  // namespace relmmd
