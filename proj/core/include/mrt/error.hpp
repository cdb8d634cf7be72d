#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mrt {

enum class ErrorCode {
  syntax_error,
  unknown_variable,
  type_mismatch,
  missing_variable,
  predicate_eval_failure,
  baseline_factor,
  unscheduled_factor,
  window_out_of_range,
  no_available_points,
  nonconstant_probabilities,
  insufficient_days,
  unknown_moderator,
  arm_empty,
  unknown_factor,
  unknown_level,
  schema_violation,
  order_violation,
  missing_header,
  config_error,
  invalid_argument,
  unknown_case_study,
  io_error,
};

/// Machine-readable name, e.g. "SYNTAX_ERROR".
std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. `location` is a 1-based
/// character position for DSL errors or a 1-based line for file errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> location = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> location_;
};

}  // namespace mrt
