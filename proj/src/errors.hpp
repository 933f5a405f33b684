#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace p2g {

// Broad failure classes. Values double as CLI exit codes.
enum class ErrorCategory : int {
  Internal = 1,
  Config = 2,
  Data = 3,
  Numeric = 4,
};

enum class ErrorKind {
  DegenerateBox,
  EmptySet,
  InvalidBeta,
  MissingLabels,
  OddDim,
  EmptyFeatureMap,
  ShapeMismatch,
  AllPartsDisabled,
  InvalidTarget,
  NonFiniteValue,
  InvalidConfig,
  EmptyDataset,
  LengthMismatch,
  SchemaError,
  MalformedAnnotation,
  ConfigMismatch,
  CorruptCheckpoint,
  IoError,
};

std::string_view kind_name(ErrorKind kind) noexcept;
ErrorCategory category_of(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace p2g
