#include "sinkdist/measures.hpp"

#include <cmath>
#include <string>

#include "sinkdist/error.hpp"

namespace sinkdist {

EmpiricalMeasure MakeMeasure(Matrix support, std::optional<std::vector<double>> weights) {
  const std::size_t n = support.rows();
  if (n == 0) throw Error(ErrorCode::kEmptySupport, "measure needs at least one atom");
  if (support.cols() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "support dimension must be >= 1");
  }
  for (double x : support.data()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteInput, "non-finite coordinate");
  }

  std::vector<double> w;
  if (!weights) {
    w.assign(n, 1.0 / static_cast<double>(n));
  } else {
    w = std::move(*weights);
    if (w.size() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "got " + std::to_string(w.size()) + " weights for " + std::to_string(n) +
                      " atoms");
    }
    double total = 0.0;
    for (double wi : w) {
      if (!std::isfinite(wi)) throw Error(ErrorCode::kNonFiniteInput, "non-finite weight");
      if (!(wi > 0.0)) throw Error(ErrorCode::kNonPositiveWeight, "weights must be > 0");
      total += wi;
    }
    if (!std::isfinite(total)) throw Error(ErrorCode::kNonFiniteInput, "weight sum overflows");
    for (double& wi : w) wi /= total;
  }
  return EmpiricalMeasure(std::move(support), std::move(w));
}

EmpiricalMeasure MakeMeasure(const std::vector<Point>& points,
                             std::optional<std::vector<double>> weights) {
  if (points.empty()) throw Error(ErrorCode::kEmptySupport, "measure needs at least one atom");
  const std::size_t d = points.front().size();
  Matrix support(points.size(), d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != d) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "point " + std::to_string(i) + " has dimension " +
                      std::to_string(points[i].size()) + ", expected " + std::to_string(d));
    }
    std::copy(points[i].begin(), points[i].end(), support.row(i).begin());
  }
  return MakeMeasure(std::move(support), std::move(weights));
}

CostMatrix ComputeCostMatrix(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cost between dimensions " + std::to_string(a.dim()) + " and " +
                    std::to_string(b.dim()));
  }
  Matrix cost(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cost(i, j) = SquaredDistance(a.point(i), b.point(j));
    }
  }
  return CostMatrix(std::move(cost));
}

}  // namespace sinkdist
