#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sinkdist/sinkhorn.hpp"

namespace sinkdist {

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6). The floor keeps
// components that are zero up to rounding from reporting huge ratios.
double RelativeError(double analytic, double numeric);

// Central difference of `f` with respect to every entry of `x`, restoring x.
std::vector<double> CentralDifference(const std::function<double()>& f, std::span<double> x,
                                      double step);

struct GradCheckComponent {
  std::string name;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::uint64_t worst_instance_seed = 0;
  int instances = 0;

  bool passed() const { return max_relative_error <= tolerance; }
};

struct GradCheckReport {
  std::vector<GradCheckComponent> components;

  bool passed() const;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kSinkhornGradTolerance = 1e-4;
inline constexpr double kBaselineGradTolerance = 1e-6;
inline constexpr double kHarnessGradTolerance = 1e-4;

// Randomized finite-difference suites. Instance k uses DeriveSeed(seed, k),
// which is what a failing component reports.
GradCheckReport CheckSinkhornGradients(std::uint64_t seed, int instances = 50,
                                       GradientMode mode = GradientMode::kUnrolled);
GradCheckReport CheckBaselineGradients(std::uint64_t seed, int instances = 50);
// One-sample corpus; every kd-loss variant at lambda = 1 plus lambda = 0.
GradCheckReport CheckHarnessGradients(std::uint64_t seed);

}  // namespace sinkdist
