#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rhoindex {

enum class ErrorCode {
  // validation
  NonSquare,
  DimTooSmall,
  NonFiniteEntry,
  NonFiniteInput,
  TooFewValues,
  DegenerateSpread,
  CorrelationOutOfRange,
  TooFewObservations,
  ZeroVarianceColumn,
  ZeroVariance,
  DegenerateBandwidth,
  InsufficientTrials,
  ShapeMismatch,
  InvalidArgument,
  // input files
  ParseError,
  RaggedRows,
  UnsupportedDtype,
  UnsupportedNpyVersion,
  BadMagic,
  TruncatedFile,
  IoError,
  // numerics
  DivergedLoss,
};

/// Coarse grouping used for process exit codes (0 ok, 1 I/O, 2 validation,
/// 3 numerical divergence).
enum class ErrorCategory { Validation, Io, Numerical };

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::DimTooSmall: return "DimTooSmall";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::DegenerateSpread: return "DegenerateSpread";
    case ErrorCode::CorrelationOutOfRange: return "CorrelationOutOfRange";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateBandwidth: return "DegenerateBandwidth";
    case ErrorCode::InsufficientTrials: return "InsufficientTrials";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::UnsupportedNpyVersion: return "UnsupportedNpyVersion";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
  }
  return "Unknown";
}

constexpr ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::RaggedRows:
    case ErrorCode::UnsupportedDtype:
    case ErrorCode::UnsupportedNpyVersion:
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    case ErrorCode::DivergedLoss:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Validation;
  }
}

/// Single exception type for the library. `what()` is prefixed with the code
/// name so messages always name the failing invariant.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rhoindex
