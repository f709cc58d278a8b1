#pragma once

#include <cstddef>
#include <vector>

#include "sinkdist/measures.hpp"

namespace sinkdist {

inline constexpr std::size_t kMaxOracleAtoms = 8;

struct AssignmentResult {
  double cost = 0.0;                    // (1/n) sum_i C[i][permutation[i]]
  std::vector<std::size_t> permutation;
};

// Exact OT between uniform measures of equal size by enumerating all n!
// assignments; among equal-cost optima the lexicographically smallest
// permutation wins. Throws kNonUniformWeights, kSizeMismatch, kTooLarge,
// kDimensionMismatch.
AssignmentResult ExactOtUniform(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace sinkdist
