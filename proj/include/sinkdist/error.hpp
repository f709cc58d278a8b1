#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sinkdist {

enum class ErrorCode {
  kEmptySupport,
  kDimensionMismatch,
  kNonPositiveWeight,
  kNonFiniteInput,
  kEmptyInput,
  kNumericalDivergence,
  kGradientNonFinite,
  kNonUniformWeights,
  kSizeMismatch,
  kTooLarge,
  kZeroVector,
  kInvalidLengths,
  kInvalidConfig,
  kNonFiniteLoss,
  kParseError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures surface as this exception; the code identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sinkdist
