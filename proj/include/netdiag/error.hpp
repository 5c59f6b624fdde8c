#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace netdiag {

enum class ErrorKind {
  MalformedRow,
  EmptyTrace,
  BadHeader,
  IoFailure,
  CatalogMismatch,
  TooFewRows,
  DimensionMismatch,
  UnknownLabel,
  StageMismatch,
  TooFewSamples,
  MissingClass,
  InsufficientRows,
  IndexOutOfRange,
  SingleClassInput,
  NonFiniteInput,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind. MalformedRow errors also carry
/// the 0-based data-row index.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> row = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> row_;
};

}  // namespace netdiag
