#include "rse/error.hpp"

namespace rse {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Shape: return "shape";
    case ErrorKind::DegenerateVector: return "degenerate-vector";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::EmptySentence: return "empty-sentence";
    case ErrorKind::Vocabulary: return "vocabulary";
    case ErrorKind::State: return "state";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::BatchSize: return "batch-size";
    case ErrorKind::Config: return "config";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::NoNegative: return "no-negative-available";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::CorruptArtifact: return "corrupt-artifact";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace rse
