#include "cellseg/error.hpp"

namespace cellseg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ViewMismatch: return "ViewMismatch";
    case ErrorCode::EmptyOperands: return "EmptyOperands";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::HeaderMalformed: return "HeaderMalformed";
    case ErrorCode::PayloadSizeMismatch: return "PayloadSizeMismatch";
    case ErrorCode::UnknownDtype: return "UnknownDtype";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::SliceOutOfRange: return "SliceOutOfRange";
    case ErrorCode::PlacementOverflow: return "PlacementOverflow";
    case ErrorCode::CropTooLarge: return "CropTooLarge";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::BoxOutsideVolume: return "BoxOutsideVolume";
    case ErrorCode::MissingMaskFile: return "MissingMaskFile";
    case ErrorCode::EmptyForeground: return "EmptyForeground";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::UsageError:
    case ErrorCode::PlacementOverflow:
    case ErrorCode::CropTooLarge:
      return 1;
    case ErrorCode::ViewMismatch:
    case ErrorCode::DimsMismatch:
    case ErrorCode::HeaderMalformed:
    case ErrorCode::PayloadSizeMismatch:
    case ErrorCode::UnknownDtype:
    case ErrorCode::IoFailure:
    case ErrorCode::ParseError:
    case ErrorCode::InvariantViolation:
    case ErrorCode::SliceOutOfRange:
    case ErrorCode::BoxOutsideVolume:
    case ErrorCode::MissingMaskFile:
    case ErrorCode::EmptyInput:
      return 2;
    case ErrorCode::EmptyOperands:
    case ErrorCode::EmptyCluster:
    case ErrorCode::EmptyForeground:
      return 3;
  }
  return 3;
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace cellseg
