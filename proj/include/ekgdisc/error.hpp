#pragma once

#include <stdexcept>
#include <string>

namespace ekgdisc {

enum class ErrorCode {
  InvalidArgument,
  InputNotFound,
  DuplicateEventId,
  DuplicateFeature,
  MissingColumn,
  BadOrderValue,
  EmptyTable,
  MalformedInput,
  UnknownFeature,
  LimitExceeded,
  MissingRelation,
  MismatchedSamples,
  NoCandidates,
  CyclicOrder,
  InvariantViolation,
};

// Stable machine-readable names, used verbatim in CLI error documents.
inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InputNotFound: return "INPUT_NOT_FOUND";
    case ErrorCode::DuplicateEventId: return "DUPLICATE_EVENT_ID";
    case ErrorCode::DuplicateFeature: return "DUPLICATE_FEATURE";
    case ErrorCode::MissingColumn: return "MISSING_COLUMN";
    case ErrorCode::BadOrderValue: return "BAD_ORDER_VALUE";
    case ErrorCode::EmptyTable: return "EMPTY_TABLE";
    case ErrorCode::MalformedInput: return "MALFORMED_INPUT";
    case ErrorCode::UnknownFeature: return "UNKNOWN_FEATURE";
    case ErrorCode::LimitExceeded: return "LIMIT_EXCEEDED";
    case ErrorCode::MissingRelation: return "MISSING_RELATION";
    case ErrorCode::MismatchedSamples: return "MISMATCHED_SAMPLES";
    case ErrorCode::NoCandidates: return "NO_CANDIDATES";
    case ErrorCode::CyclicOrder: return "CYCLIC_ORDER";
    case ErrorCode::InvariantViolation: return "INVARIANT_VIOLATION";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ekgdisc
