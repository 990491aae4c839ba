#include "gpchaos/error.hpp"

namespace gpchaos {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kValidation: return "Validation";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kCapExceeded: return "CapExceeded";
    case ErrorKind::kDensityFloor: return "DensityFloor";
    case ErrorKind::kNotNormalized: return "NotNormalized";
    case ErrorKind::kFitResidual: return "FitResidual";
    case ErrorKind::kZeroScatteringLength: return "ZeroScatteringLength";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kNonMonotone: return "NonMonotone";
    case ErrorKind::kDomainEscape: return "DomainEscape";
    case ErrorKind::kSizeMismatch: return "SizeMismatch";
    case ErrorKind::kAbsoluteContinuity: return "AbsoluteContinuity";
    case ErrorKind::kMomentDiverged: return "MomentDiverged";
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kInvariant: return "InvariantViolation";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kValidation:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kCapExceeded:
    case ErrorKind::kSizeMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace gpchaos
