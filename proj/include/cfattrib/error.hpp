#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfattrib {

enum class ErrorCode {
  kCycleDetected,
  kDanglingParent,
  kMultipleSinks,
  kDuplicateName,
  kInvalidNode,
  kUnknownFunction,
  kInsufficientHistory,
  kInsufficientData,
  kSingularDesign,
  kDimensionMismatch,
  kMissingColumn,
  kEmptyInput,
  kNonPositiveVolume,
  kTooManyInputs,
  kUnmappedInput,
  kDegenerateSelection,
  kSchemaMismatch,
  kGapInDays,
  kInvalidArgument,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception type; `code()`
// identifies the failure class so callers and tests can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cfattrib
