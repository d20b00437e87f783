#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icfringe {

enum class ErrorCode {
  InvalidArgument,
  ConfigError,
  QuadratureFailure,
  NormalizationFailure,
  DegeneratePhases,
  InsufficientData,
  CenterNotFound,
  DegenerateScore,
  ProfilePeakNotCentral,
  NoHalfCrossing,
  NoDecay,
  BracketFailure,
  RegimeViolation,
  MalformedHeader,
  TruncatedFile,
  MetadataMismatch,
  IoError,
};

enum class ErrorCategory { Input, Numerical, Io };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category(ErrorCode code) noexcept;

/// Process exit status for an error: 1 input, 2 numerical/regime, 3 I/O.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Copy of this error tagged with the pipeline stage it came from.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace icfringe
