#include "errors.hpp"

namespace p2g {

std::string_view kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateBox: return "DegenerateBox";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::InvalidBeta: return "InvalidBeta";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::OddDim: return "OddDim";
    case ErrorKind::EmptyFeatureMap: return "EmptyFeatureMap";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::AllPartsDisabled: return "AllPartsDisabled";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::MalformedAnnotation: return "MalformedAnnotation";
    case ErrorKind::ConfigMismatch: return "ConfigMismatch";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidBeta:
    case ErrorKind::OddDim:
    case ErrorKind::AllPartsDisabled:
    case ErrorKind::InvalidConfig:
    case ErrorKind::ConfigMismatch:
      return ErrorCategory::Config;
    case ErrorKind::NonFiniteValue:
      return ErrorCategory::Numeric;
    case ErrorKind::ShapeMismatch:
    case ErrorKind::LengthMismatch:
      return ErrorCategory::Internal;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace p2g
