#include "sinkdist/ot_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sinkdist/error.hpp"

namespace sinkdist {
namespace {

void RequireUniform(const EmpiricalMeasure& m, const char* name) {
  const double expected = 1.0 / static_cast<double>(m.size());
  for (double w : m.weights()) {
    if (std::abs(w - expected) > 1e-12) {
      throw Error(ErrorCode::kNonUniformWeights, std::string(name) + " is not uniform");
    }
  }
}

}  // namespace

AssignmentResult ExactOtUniform(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kSizeMismatch, "measures have " + std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()) + " atoms");
  }
  const std::size_t n = a.size();
  if (n > kMaxOracleAtoms) {
    throw Error(ErrorCode::kTooLarge, std::to_string(n) + " atoms exceeds the enumeration bound " +
                                          std::to_string(kMaxOracleAtoms));
  }
  RequireUniform(a, "first measure");
  RequireUniform(b, "second measure");
  const CostMatrix cost = ComputeCostMatrix(a, b);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  AssignmentResult best;
  double best_sum = 0.0;
  bool first = true;
  // next_permutation walks in lexicographic order, so keeping only strict
  // improvements leaves the smallest permutation among ties.
  do {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += cost(i, perm[i]);
    if (first || sum < best_sum) {
      best_sum = sum;
      best.permutation = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.cost = best_sum / static_cast<double>(n);
  return best;
}

}  // namespace sinkdist
