#include "mfc/error.hpp"

namespace mfc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeMass: return "NegativeMass";
    case ErrorKind::ZeroTotalMass: return "ZeroTotalMass";
    case ErrorKind::NormalizationTooLarge: return "NormalizationTooLarge";
    case ErrorKind::SizeOverflow: return "SizeOverflow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadActionRange: return "BadActionRange";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::UnstableStep: return "UnstableStep";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::NegativeDensity: return "NegativeDensity";
    case ErrorKind::IterationCap: return "IterationCap";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BufferTooSmall: return "BufferTooSmall";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace mfc
