#pragma once

#include <string_view>
#include <vector>

#include "sinkdist/matrix.hpp"
#include "sinkdist/measures.hpp"

namespace sinkdist {

// Pooled-vector distances used as alternative distillation losses. Pooling
// reads the support only; atom weights play no part.

enum class Pooling { kMean, kMax };

struct PooledVector {
  std::vector<double> values;
  Pooling pooling = Pooling::kMean;
};

PooledVector Pool(const EmpiricalMeasure& m, Pooling mode);

// 1 - cos(u, v), in [0, 2]. Throws kZeroVector if either norm is below 1e-30,
// kDimensionMismatch on length mismatch.
double CosineDistance(const PooledVector& u, const PooledVector& v);

// Mean over coordinates of (u_k - v_k)^2.
double MseDistance(const PooledVector& u, const PooledVector& v);

// Sum over coordinates of (u_k - v_k)^2.
double SummedSquaredError(const PooledVector& u, const PooledVector& v);

enum class BaselineVariant { kMeanCs, kMeanMse, kMaxCs, kMaxMse };

std::string_view BaselineVariantName(BaselineVariant variant);

struct BaselineLoss {
  double value = 0.0;
  Matrix gradient;  // d value / d s.point(j), one row per student atom
};

// Max pooling routes each coordinate's gradient to the lowest-index argmax.
BaselineLoss BaselineKdLoss(const EmpiricalMeasure& teacher, const EmpiricalMeasure& student,
                            BaselineVariant variant);

}  // namespace sinkdist
