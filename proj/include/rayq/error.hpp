#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rayq {

enum class ErrorCode {
  ZeroVector,
  NonPositiveDenominator,
  DegenerateNormal,
  DegenerateSample,
  DimensionTooSmall,
  DimensionMismatch,
  InvalidArgument,
  ZeroB,
  NonPositiveD,
  ZeroAggregate,
  DenseRequired,
  NotSpd,
  NotSquare,
  NotHermitianPD,
  CholeskyFailure,
  EigensolverFailure,
  ZeroMaxValue,
  SchemaMismatch,
  UnknownFigure,
  Io,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroB: return "ZeroB";
    case ErrorCode::NonPositiveD: return "NonPositiveD";
    case ErrorCode::ZeroAggregate: return "ZeroAggregate";
    case ErrorCode::DenseRequired: return "DenseRequired";
    case ErrorCode::NotSpd: return "NotSpd";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NotHermitianPD: return "NotHermitianPD";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::EigensolverFailure: return "EigensolverFailure";
    case ErrorCode::ZeroMaxValue: return "ZeroMaxValue";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnknownFigure: return "UnknownFigure";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Numerical failures map to CLI exit code 2, I/O to 3, the rest to 1.
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::Io:
      case ErrorCode::SchemaMismatch:
      case ErrorCode::UnknownFigure:
      case ErrorCode::InvalidArgument:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace rayq
