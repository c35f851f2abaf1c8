#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uavids {

enum class ErrorKind {
  Io,
  Parse,
  Schema,
  Shape,
  Version,
  Precondition,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Exception type used across the toolkit. The kind maps to the CLI's
/// machine-parseable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace uavids
