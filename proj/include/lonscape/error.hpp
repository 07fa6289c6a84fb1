#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lonscape {

enum class ErrorCode {
  InvalidTree,
  InvalidGenotype,
  CycleDetected,
  EvalBackendFailure,
  Timeout,
  ProtocolError,
  EmptyInput,
  DanglingTransition,
  NoReachablePairs,
  ConfigInvalid,
  SchemaMismatch,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidTree: return "INVALID_TREE";
    case ErrorCode::InvalidGenotype: return "INVALID_GENOTYPE";
    case ErrorCode::CycleDetected: return "CYCLE_DETECTED";
    case ErrorCode::EvalBackendFailure: return "EVAL_BACKEND_FAILURE";
    case ErrorCode::Timeout: return "TIMEOUT";
    case ErrorCode::ProtocolError: return "PROTOCOL_ERROR";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::DanglingTransition: return "DANGLING_TRANSITION";
    case ErrorCode::NoReachablePairs: return "NO_REACHABLE_PAIRS";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Timeouts and protocol violations are both backend failures from the caller's view.
  bool is_backend_failure() const noexcept {
    return code_ == ErrorCode::EvalBackendFailure || code_ == ErrorCode::Timeout ||
           code_ == ErrorCode::ProtocolError;
  }

 private:
  ErrorCode code_;
};

}  // namespace lonscape
