#pragma once

#include <stdexcept>
#include <string>

namespace relmmd {

/// Failure categories. The CLI maps each one to its own exit status.
enum class Errc {
  invalid_argument,
  dimension_mismatch,
  sample_too_small,
  non_finite,
  degenerate_data,
  io_error,
  parse_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace relmmd
