#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prewet {

enum class Errc {
  invalid_parameter,
  non_finite_objective,
  bracket_failure,
  empty_support,
  empty_path_space,
  truncation_overflow,
  spec_mismatch,
  threshold_beyond_truncation,
  index_order,
  area_dp_budget,
  no_convergence,
  budget_exceeded,
  null_event,
  insufficient_grid,
  precondition,
  config_error,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI and the Python layer can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace prewet
