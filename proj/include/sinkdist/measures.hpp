#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sinkdist/matrix.hpp"

namespace sinkdist {

using Point = std::vector<double>;

// A finitely supported probability measure: support points of a common
// dimension with strictly positive weights summing to one. Immutable once
// built; construct through MakeMeasure.
class EmpiricalMeasure {
 public:
  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return support_.cols(); }

  std::span<const double> point(std::size_t i) const { return support_.row(i); }
  const Matrix& support() const noexcept { return support_; }
  std::span<const double> weights() const noexcept { return weights_; }

  friend EmpiricalMeasure MakeMeasure(Matrix, std::optional<std::vector<double>>);

 private:
  EmpiricalMeasure(Matrix support, std::vector<double> weights)
      : support_(std::move(support)), weights_(std::move(weights)) {}

  Matrix support_;
  std::vector<double> weights_;
};

// Builds a measure from support rows. Without weights every atom gets 1/n;
// given weights are divided by their sum.
// Throws kEmptySupport, kDimensionMismatch, kNonPositiveWeight, kNonFiniteInput.
EmpiricalMeasure MakeMeasure(Matrix support,
                             std::optional<std::vector<double>> weights = std::nullopt);
EmpiricalMeasure MakeMeasure(const std::vector<Point>& points,
                             std::optional<std::vector<double>> weights = std::nullopt);

// Pairwise squared Euclidean costs, rows indexed by a's atoms and columns by
// b's atoms.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {}

  std::size_t rows() const noexcept { return entries_.rows(); }
  std::size_t cols() const noexcept { return entries_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& entries() const noexcept { return entries_; }

 private:
  Matrix entries_;
};

CostMatrix ComputeCostMatrix(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace sinkdist
