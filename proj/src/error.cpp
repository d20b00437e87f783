#include "icfringe/error.hpp"

namespace icfringe {

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& stage) {
  std::string out;
  if (!stage.empty()) {
    out += stage;
    out += ": ";
  }
  out += to_string(code);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NormalizationFailure: return "NormalizationFailure";
    case ErrorCode::DegeneratePhases: return "DegeneratePhases";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::CenterNotFound: return "CenterNotFound";
    case ErrorCode::DegenerateScore: return "DegenerateScore";
    case ErrorCode::ProfilePeakNotCentral: return "ProfilePeakNotCentral";
    case ErrorCode::NoHalfCrossing: return "NoHalfCrossing";
    case ErrorCode::NoDecay: return "NoDecay";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MetadataMismatch: return "MetadataMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
      return ErrorCategory::Input;
    case ErrorCode::MalformedHeader:
    case ErrorCode::TruncatedFile:
    case ErrorCode::MetadataMismatch:
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Numerical;
  }
}

int exit_status(ErrorCode code) noexcept {
  switch (category(code)) {
    case ErrorCategory::Input: return 1;
    case ErrorCategory::Numerical: return 2;
    case ErrorCategory::Io: return 3;
  }
  return 2;
}

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(message) {}

Error Error::with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

}  // namespace icfringe
