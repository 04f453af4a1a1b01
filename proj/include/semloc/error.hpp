#pragma once

#include <stdexcept>
#include <string>

namespace semloc {

enum class ErrorCode {
  kCheiralityViolation,
  kDegenerateGeometry,
  kNoSolution,
  kSingularNormalEquations,
  kInsufficientSamples,
  kConsensusFailure,
  kFamilyMismatch,
  kIndexOutOfRange,
  kOutOfBounds,
  kLengthMismatch,
  kDimensionMismatch,
  kInvalidRotation,
  kInvalidArgument,
  kFormatError,
  kMissingAsset,
  kInvariantViolation,
  kIo,
  kVersionMismatch,
  kConfigError,
  kNameMismatch,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCheiralityViolation: return "CheiralityViolation";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kNoSolution: return "NoSolution";
    case ErrorCode::kSingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kConsensusFailure: return "ConsensusFailure";
    case ErrorCode::kFamilyMismatch: return "FamilyMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidRotation: return "InvalidRotation";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kMissingAsset: return "MissingAsset";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kNameMismatch: return "NameMismatch";
  }
  return "UnknownError";
}

// All library failures surface as Error carrying a machine-checkable code;
// in-band failure values (+inf residuals, status enums) are used where the
// caller is expected to continue.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semloc
