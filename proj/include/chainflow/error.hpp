#pragma once

#include <stdexcept>
#include <string>

namespace chainflow {

enum class ErrorKind {
  Io,
  Schema,
  FormatVersion,
  Config,
  EmptySequence,
  PatternMismatch,
  DanglingUuid,
  UnknownAddress,
  EmptyCluster,
  IneligibleFlow,
  ShapeMismatch,
  Divergence,
  DegenerateInput,
  SingularAffinity,
  UndefinedScore,
  EmptyFlow,
  InvalidSpec,
  UnsupportedFormat,
  Internal,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace chainflow
