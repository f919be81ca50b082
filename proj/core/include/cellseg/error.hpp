#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cellseg {

enum class ErrorCode {
  // geometry
  ViewMismatch,
  EmptyOperands,
  DimsMismatch,
  // volume / file IO
  HeaderMalformed,
  PayloadSizeMismatch,
  UnknownDtype,
  IoFailure,
  // detection files
  ParseError,
  InvariantViolation,
  SliceOutOfRange,
  // synthesis
  PlacementOverflow,
  CropTooLarge,
  // fusion / segmentation
  EmptyCluster,
  BoxOutsideVolume,
  MissingMaskFile,
  EmptyForeground,
  // metrics
  EmptyInput,
  // configuration / usage
  ConfigError,
  UsageError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Process exit status for a failure: 1 usage/config, 2 data/format, 3 internal.
int exit_status(ErrorCode code) noexcept;

/// Base exception for every recoverable failure raised by the library. The
/// code lets callers (the CLI in particular) map failures to exit statuses
/// without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace cellseg
