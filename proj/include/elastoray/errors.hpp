#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace elastoray {

enum class ErrorCode {
  UnsupportedPotential,
  OutOfDomain,
  DegenerateDirection,
  NotOnBoundary,
  InvalidCovector,
  Glancing,
  SingularResidue,
  FrameDegenerate,
  NearDegenerateFrame,
  DegenerateMuting,
  GlancingExit,
  MaxStepsExceeded,
  StepControlFailure,
  GlancingReflection,
  InvalidMedium,
  Config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedPotential: return "unsupported-potential";
    case ErrorCode::OutOfDomain: return "out-of-domain";
    case ErrorCode::DegenerateDirection: return "degenerate-direction";
    case ErrorCode::NotOnBoundary: return "not-on-boundary";
    case ErrorCode::InvalidCovector: return "invalid-covector";
    case ErrorCode::Glancing: return "glancing";
    case ErrorCode::SingularResidue: return "singular-residue";
    case ErrorCode::FrameDegenerate: return "frame-degenerate";
    case ErrorCode::NearDegenerateFrame: return "near-degenerate-frame";
    case ErrorCode::DegenerateMuting: return "degenerate-muting";
    case ErrorCode::GlancingExit: return "glancing-exit";
    case ErrorCode::MaxStepsExceeded: return "max-steps-exceeded";
    case ErrorCode::StepControlFailure: return "step-control-failure";
    case ErrorCode::GlancingReflection: return "glancing-reflection";
    case ErrorCode::InvalidMedium: return "invalid-medium";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a characteristic quadratic has (numerically) a double root.
class GlancingError : public Error {
 public:
  GlancingError(const std::string& what, double discriminant)
      : Error(ErrorCode::Glancing, what), discriminant_(discriminant) {}

  double discriminant() const noexcept { return discriminant_; }

 private:
  double discriminant_;
};

}  // namespace elastoray
