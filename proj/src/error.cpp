#include "specpert/error.hpp"

namespace specpert {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NOT_POSITIVE_DEFINITE";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::InvalidLaw: return "INVALID_LAW";
    case ErrorCode::NotDecreasing: return "NOT_DECREASING";
    case ErrorCode::InterleaveViolation: return "INTERLEAVE_VIOLATION";
    case ErrorCode::KernelNotPsd: return "KERNEL_NOT_PSD";
    case ErrorCode::KernelNotSymmetric: return "KERNEL_NOT_SYMMETRIC";
    case ErrorCode::WindowTooSmall: return "WINDOW_TOO_SMALL";
    case ErrorCode::NonpositiveValue: return "NONPOSITIVE_VALUE";
    case ErrorCode::IncompatibleFits: return "INCOMPATIBLE_FITS";
    case ErrorCode::ZeroVector: return "ZERO_VECTOR";
    case ErrorCode::DegenerateGap: return "DEGENERATE_GAP";
    case ErrorCode::WrongSign: return "WRONG_SIGN";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace specpert
