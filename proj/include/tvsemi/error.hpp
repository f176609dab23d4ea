#pragma once

#include <stdexcept>
#include <string>

namespace tvsemi {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  InsufficientData,
  DegenerateWeights,
  SingularSmoother,
  SingularDesign,
  NonPositiveVariance,
  NonPositiveWeight,
  NonPdInput,
  LagTooLarge,
  StabilityViolation,
  ParseError,
  SchemaError,
  IoError,
  ReplicationBudgetExceeded,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::DegenerateWeights: return "degenerate_weights";
    case ErrorCode::SingularSmoother: return "singular_smoother";
    case ErrorCode::SingularDesign: return "singular_design";
    case ErrorCode::NonPositiveVariance: return "non_positive_variance";
    case ErrorCode::NonPositiveWeight: return "non_positive_weight";
    case ErrorCode::NonPdInput: return "non_pd_input";
    case ErrorCode::LagTooLarge: return "lag_too_large";
    case ErrorCode::StabilityViolation: return "stability_violation";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::SchemaError: return "schema_error";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::ReplicationBudgetExceeded: return "replication_budget_exceeded";
  }
  return "unknown";
}

/// True for failures that arise from the data or the numerics rather than
/// from malformed input. The CLI maps these to exit code 3.
inline bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateWeights:
    case ErrorCode::SingularSmoother:
    case ErrorCode::SingularDesign:
    case ErrorCode::NonPdInput:
    case ErrorCode::ReplicationBudgetExceeded:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace tvsemi
