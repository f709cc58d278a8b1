#include "sinkdist/error.hpp"

namespace sinkdist {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptySupport: return "EmptySupport";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNumericalDivergence: return "NumericalDivergence";
    case ErrorCode::kGradientNonFinite: return "GradientNonFinite";
    case ErrorCode::kNonUniformWeights: return "NonUniformWeights";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kInvalidLengths: return "InvalidLengths";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace sinkdist
