#include "netdiag/error.hpp"

namespace netdiag {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::BadHeader: return "BadHeader";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::CatalogMismatch: return "CatalogMismatch";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::StageMismatch: return "StageMismatch";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::InsufficientRows: return "InsufficientRows";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::SingleClassInput: return "SingleClassInput";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> row)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      row_(row) {}

}  // namespace netdiag
