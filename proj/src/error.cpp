#include "cfattrib/error.hpp"

namespace cfattrib {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kDanglingParent: return "DanglingParent";
    case ErrorCode::kMultipleSinks: return "MultipleSinks";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kInvalidNode: return "InvalidNode";
    case ErrorCode::kUnknownFunction: return "UnknownFunction";
    case ErrorCode::kInsufficientHistory: return "InsufficientHistory";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonPositiveVolume: return "NonPositiveVolume";
    case ErrorCode::kTooManyInputs: return "TooManyInputs";
    case ErrorCode::kUnmappedInput: return "UnmappedInput";
    case ErrorCode::kDegenerateSelection: return "DegenerateSelection";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kGapInDays: return "GapInDays";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace cfattrib
