#include "chainflow/error.hpp"

namespace chainflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::FormatVersion: return "FormatVersionError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::PatternMismatch: return "PatternMismatch";
    case ErrorKind::DanglingUuid: return "DanglingUuid";
    case ErrorKind::UnknownAddress: return "UnknownAddress";
    case ErrorKind::EmptyCluster: return "EmptyCluster";
    case ErrorKind::IneligibleFlow: return "IneligibleFlow";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Divergence: return "DivergenceError";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::SingularAffinity: return "SingularAffinity";
    case ErrorKind::UndefinedScore: return "UndefinedScore";
    case ErrorKind::EmptyFlow: return "EmptyFlow";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::Internal: return "InternalError";
  }
  return "Error";
}

}  // namespace chainflow
