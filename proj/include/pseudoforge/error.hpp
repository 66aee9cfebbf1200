#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pseudoforge {

enum class ErrorCode {
  CountMismatch,
  InvalidThreshold,
  InvalidArgument,
  NoBoundary,
  DimensionMismatch,
  EmptyDataset,
  NoRetainedDetections,
  UnknownImage,
  EmptyBox,
  NonFinite,
  SchemaError,
  ConfigError,
  ImageSetMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is reported through this exception; `code()` lets
/// the CLI map failures onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pseudoforge
