#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpchaos {

enum class ErrorKind {
  kInvalidArgument,
  kValidation,
  kDimensionMismatch,
  kCapExceeded,
  kDensityFloor,
  kNotNormalized,
  kFitResidual,
  kZeroScatteringLength,
  kNoConvergence,
  kNonMonotone,
  kDomainEscape,
  kSizeMismatch,
  kAbsoluteContinuity,
  kMomentDiverged,
  kIo,
  kInvariant,
};

std::string_view to_string(ErrorKind kind);

// Validation-type errors map to exit status 2, everything else to 3.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string subject = {})
      : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

  ErrorKind kind() const { return kind_; }
  /// Config field or invariant the error refers to, if any.
  const std::string& subject() const { return subject_; }

 private:
  ErrorKind kind_;
  std::string subject_;
};

/// Thrown by iterative solvers; carries the last residual.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& message, int iterations, double last_residual)
      : Error(ErrorKind::kNoConvergence, message, "convergence"),
        iterations_(iterations),
        last_residual_(last_residual) {}

  int iterations() const { return iterations_; }
  double last_residual() const { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message,
                    const std::string& subject = {}) {
  if (!condition) throw Error(kind, message, subject);
}

}  // namespace gpchaos
