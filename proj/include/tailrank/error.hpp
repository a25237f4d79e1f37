#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tailrank {

enum class ErrorCode {
  EmptySample,
  DegenerateThreshold,
  OutOfSupport,
  MomentDivergence,
  SingularParameter,
  InsufficientData,
  InvalidThreshold,
  InvalidView,
  InvalidBeta,
  InvalidGamma,
  InvalidArgument,
  EmptyRange,
  MissingPoint,
  Schema,
  Data,
  EmptySubset,
  Config,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySample: return "empty-sample";
    case ErrorCode::DegenerateThreshold: return "degenerate-threshold";
    case ErrorCode::OutOfSupport: return "out-of-support";
    case ErrorCode::MomentDivergence: return "moment-divergence";
    case ErrorCode::SingularParameter: return "singular-parameter";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InvalidThreshold: return "invalid-threshold";
    case ErrorCode::InvalidView: return "invalid-view";
    case ErrorCode::InvalidBeta: return "invalid-beta";
    case ErrorCode::InvalidGamma: return "invalid-gamma";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::EmptyRange: return "empty-range";
    case ErrorCode::MissingPoint: return "missing-point";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Data: return "data";
    case ErrorCode::EmptySubset: return "empty-subset";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tailrank
