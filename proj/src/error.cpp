#include "spineseg/error.hpp"

namespace spineseg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
    case ErrorCode::kUnsupportedShape: return "UnsupportedShape";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kDegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kCorruptRle: return "CorruptRle";
    case ErrorCode::kClassIndexOutOfRange: return "ClassIndexOutOfRange";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNoSacralAnchor: return "NoSacralAnchor";
    case ErrorCode::kMultipleSacralAnchors: return "MultipleSacralAnchors";
    case ErrorCode::kBrokenChain: return "BrokenChain";
    case ErrorCode::kKernelTooLarge: return "KernelTooLarge";
    case ErrorCode::kInvalidKernel: return "InvalidKernel";
    case ErrorCode::kDegenerateShape: return "DegenerateShape";
    case ErrorCode::kMissingLevel: return "MissingLevel";
    case ErrorCode::kDegenerateEndplate: return "DegenerateEndplate";
    case ErrorCode::kInfeasibleLayout: return "InfeasibleLayout";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace spineseg
