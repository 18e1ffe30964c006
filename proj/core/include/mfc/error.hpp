#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfc {

enum class ErrorKind {
  NegativeMass,
  ZeroTotalMass,
  NormalizationTooLarge,
  SizeOverflow,
  DimensionMismatch,
  BadActionRange,
  InvalidParameter,
  UnstableStep,
  CFLViolation,
  NegativeDensity,
  IterationCap,
  NonFiniteGradient,
  ShapeMismatch,
  BufferTooSmall,
  NonFiniteLoss,
  GridMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace mfc
