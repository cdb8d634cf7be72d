#include "mrt/error.hpp"

namespace mrt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax_error: return "SYNTAX_ERROR";
    case ErrorCode::unknown_variable: return "UNKNOWN_VARIABLE";
    case ErrorCode::type_mismatch: return "TYPE_MISMATCH";
    case ErrorCode::missing_variable: return "MISSING_VARIABLE";
    case ErrorCode::predicate_eval_failure: return "PREDICATE_EVAL_FAILURE";
    case ErrorCode::baseline_factor: return "BASELINE_FACTOR";
    case ErrorCode::unscheduled_factor: return "UNSCHEDULED_FACTOR";
    case ErrorCode::window_out_of_range: return "WINDOW_OUT_OF_RANGE";
    case ErrorCode::no_available_points: return "NO_AVAILABLE_POINTS";
    case ErrorCode::nonconstant_probabilities: return "NONCONSTANT_PROBABILITIES";
    case ErrorCode::insufficient_days: return "INSUFFICIENT_DAYS";
    case ErrorCode::unknown_moderator: return "UNKNOWN_MODERATOR";
    case ErrorCode::arm_empty: return "ARM_EMPTY";
    case ErrorCode::unknown_factor: return "UNKNOWN_FACTOR";
    case ErrorCode::unknown_level: return "UNKNOWN_LEVEL";
    case ErrorCode::schema_violation: return "SCHEMA_VIOLATION";
    case ErrorCode::order_violation: return "ORDER_VIOLATION";
    case ErrorCode::missing_header: return "MISSING_HEADER";
    case ErrorCode::config_error: return "CONFIG_ERROR";
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::unknown_case_study: return "UNKNOWN_CASE_STUDY";
    case ErrorCode::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> location) {
  std::string out{to_string(code)};
  if (location) out += "(" + std::to_string(*location) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> location)
    : std::runtime_error(decorate(code, message, location)),
      code_(code),
      location_(location) {}

}  // namespace mrt
