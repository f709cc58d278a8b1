#include "sinkdist/baselines.hpp"

#include <cmath>
#include <string>

#include "sinkdist/error.hpp"

namespace sinkdist {
namespace {

constexpr double kMinNorm = 1e-30;

void RequireSameDim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vectors of length " + std::to_string(a) + " and " + std::to_string(b));
  }
}

// Row index holding the maximum of each coordinate, first index on ties.
std::vector<std::size_t> ArgMaxPerCoordinate(const EmpiricalMeasure& m) {
  std::vector<std::size_t> idx(m.dim(), 0);
  for (std::size_t j = 1; j < m.size(); ++j) {
    const auto p = m.point(j);
    for (std::size_t k = 0; k < m.dim(); ++k) {
      if (p[k] > m.point(idx[k])[k]) idx[k] = j;
    }
  }
  return idx;
}

}  // namespace

std::string_view BaselineVariantName(BaselineVariant variant) {
  switch (variant) {
    case BaselineVariant::kMeanCs: return "MeanCS";
    case BaselineVariant::kMeanMse: return "MeanMSE";
    case BaselineVariant::kMaxCs: return "MaxCS";
    case BaselineVariant::kMaxMse: return "MaxMSE";
  }
  return "?";
}

PooledVector Pool(const EmpiricalMeasure& m, Pooling mode) {
  PooledVector out;
  out.pooling = mode;
  if (mode == Pooling::kMean) {
    out.values.assign(m.dim(), 0.0);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto p = m.point(j);
      for (std::size_t k = 0; k < m.dim(); ++k) out.values[k] += p[k];
    }
    for (double& v : out.values) v /= static_cast<double>(m.size());
  } else {
    const auto p0 = m.point(0);
    out.values.assign(p0.begin(), p0.end());
    for (std::size_t j = 1; j < m.size(); ++j) {
      const auto p = m.point(j);
      for (std::size_t k = 0; k < m.dim(); ++k) out.values[k] = std::max(out.values[k], p[k]);
    }
  }
  return out;
}

double CosineDistance(const PooledVector& u, const PooledVector& v) {
  RequireSameDim(u.values.size(), v.values.size());
  const double nu = std::sqrt(Dot(u.values, u.values));
  const double nv = std::sqrt(Dot(v.values, v.values));
  if (nu < kMinNorm || nv < kMinNorm) {
    throw Error(ErrorCode::kZeroVector, "cosine distance of a zero vector");
  }
  return 1.0 - Dot(u.values, v.values) / (nu * nv);
}

double SummedSquaredError(const PooledVector& u, const PooledVector& v) {
  RequireSameDim(u.values.size(), v.values.size());
  return SquaredDistance(u.values, v.values);
}

double MseDistance(const PooledVector& u, const PooledVector& v) {
  return SummedSquaredError(u, v) / static_cast<double>(u.values.size());
}

BaselineLoss BaselineKdLoss(const EmpiricalMeasure& teacher, const EmpiricalMeasure& student,
                            BaselineVariant variant) {
  RequireSameDim(teacher.dim(), student.dim());
  const bool use_max =
      variant == BaselineVariant::kMaxCs || variant == BaselineVariant::kMaxMse;
  const bool use_cosine =
      variant == BaselineVariant::kMeanCs || variant == BaselineVariant::kMaxCs;
  const Pooling mode = use_max ? Pooling::kMax : Pooling::kMean;
  const PooledVector u = Pool(teacher, mode);
  const PooledVector v = Pool(student, mode);
  const std::size_t d = student.dim();

  BaselineLoss out;
  std::vector<double> pooled_grad(d);
  if (use_cosine) {
    out.value = CosineDistance(u, v);
    const double nu = std::sqrt(Dot(u.values, u.values));
    const double nv = std::sqrt(Dot(v.values, v.values));
    const double uv = Dot(u.values, v.values);
    for (std::size_t k = 0; k < d; ++k) {
      pooled_grad[k] = -(u.values[k] / (nu * nv) - uv * v.values[k] / (nu * nv * nv * nv));
    }
  } else {
    out.value = MseDistance(u, v);
    for (std::size_t k = 0; k < d; ++k) {
      pooled_grad[k] = 2.0 * (v.values[k] - u.values[k]) / static_cast<double>(d);
    }
  }

  out.gradient = Matrix(student.size(), d);
  if (use_max) {
    const auto argmax = ArgMaxPerCoordinate(student);
    for (std::size_t k = 0; k < d; ++k) out.gradient(argmax[k], k) = pooled_grad[k];
  } else {
    const double share = 1.0 / static_cast<double>(student.size());
    for (std::size_t j = 0; j < student.size(); ++j) {
      for (std::size_t k = 0; k < d; ++k) out.gradient(j, k) = pooled_grad[k] * share;
    }
  }
  return out;
}

}  // namespace sinkdist
