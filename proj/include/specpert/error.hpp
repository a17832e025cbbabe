#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace specpert {

enum class ErrorCode {
  NotPositiveDefinite,
  NoConvergence,
  InvalidLaw,
  NotDecreasing,
  InterleaveViolation,
  KernelNotPsd,
  KernelNotSymmetric,
  WindowTooSmall,
  NonpositiveValue,
  IncompatibleFits,
  ZeroVector,
  DegenerateGap,
  WrongSign,
  ConfigInvalid,
  ParseError,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the library error codes. The message is
/// prefixed with the code name so it survives being printed on its own.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace specpert
