#pragma once

#include <span>
#include <vector>

#include "sinkdist/matrix.hpp"
#include "sinkdist/measures.hpp"

namespace sinkdist {

// Sign convention of the potential updates.
enum class UpdateForm {
  // f_i = -eps * LSE_k[log b_k + (g_k - C_ik) / eps]; the entropic OT soft-min.
  kSoftMin,
  // f_i = +eps * LSE_k[...]. Diverges even for single atoms; kept only so the
  // failure can be demonstrated.
  kLiteralDebug,
};

struct SinkhornConfig {
  double epsilon = 0.0025;
  int num_iterations = 14;
  // false: g is updated from the f computed in the same sweep (Gauss-Seidel).
  // true: both potentials are updated from the previous sweep (Jacobi).
  bool symmetric_update = false;
  double max_abs_potential = 1e12;
  // Stop once max_i |f_new - f_old| < early_stop_tolerance * epsilon;
  // num_iterations then acts as an upper bound.
  bool early_stop = false;
  double early_stop_tolerance = 1e-9;
  UpdateForm update_form = UpdateForm::kSoftMin;

  // Throws Error(kInvalidConfig).
  void Validate() const;
};

struct DualPotentials {
  std::vector<double> f;
  std::vector<double> g;
  int iterations_run = 0;
};

struct DivergenceReport {
  double ot_ab = 0.0;
  double ot_aa = 0.0;
  double ot_bb = 0.0;
  double divergence = 0.0;
  DualPotentials potentials_ab;
};

// log(sum_k exp(v_k)) with the max-shift. Throws kEmptyInput.
double LogSumExp(std::span<const double> values);

// Runs the log-domain Sinkhorn loop from f = g = 0. Throws kDimensionMismatch
// when the cost shape disagrees with the measures and kNumericalDivergence as
// soon as a potential is non-finite or exceeds cfg.max_abs_potential.
DualPotentials SinkhornLoop(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                            const CostMatrix& cost, const SinkhornConfig& cfg);

// sum_i a_i f_i + sum_j b_j g_j.
double OtDualValue(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   const DualPotentials& potentials);

// OT(a, b) - OT(a, a) / 2 - OT(b, b) / 2, each term from its own loop.
DivergenceReport SinkhornDivergence(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                    const SinkhornConfig& cfg);

enum class GradientMode {
  // Exact derivative of the computed value: reverse-mode through every sweep.
  kUnrolled,
  // Potentials held fixed at their final values; exact only at convergence.
  kEnvelope,
};

// d divergence / d b.point(j), one row per atom of b. Throws
// kGradientNonFinite, plus anything SinkhornDivergence throws.
Matrix DivergenceGradient(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                          const SinkhornConfig& cfg,
                          GradientMode mode = GradientMode::kUnrolled);

// Divergence and gradient in one pass; the harness uses this per sample.
struct DivergenceWithGradient {
  DivergenceReport report;
  Matrix gradient;
};
DivergenceWithGradient SinkhornDivergenceWithGradient(
    const EmpiricalMeasure& a, const EmpiricalMeasure& b, const SinkhornConfig& cfg,
    GradientMode mode = GradientMode::kUnrolled);

}  // namespace sinkdist
