#include "sinkdist/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sinkdist/error.hpp"

namespace sinkdist {
namespace {

struct LoopHistory {
  // f_iterates[t], g_iterates[t] hold the potentials after sweep t; index 0 is
  // the zero initialization.
  std::vector<std::vector<double>> f_iterates;
  std::vector<std::vector<double>> g_iterates;
};

std::vector<double> LogWeights(const EmpiricalMeasure& m) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = std::log(m.weights()[i]);
  return out;
}

void CheckPotentials(const std::vector<double>& values, const SinkhornConfig& cfg,
                     const char* name, int sweep) {
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > cfg.max_abs_potential) {
      throw Error(ErrorCode::kNumericalDivergence,
                  std::string("potential ") + name + " left the finite range at sweep " +
                      std::to_string(sweep));
    }
  }
}

// out_i = sign * eps * LSE_k[log_w_k + (other_k - C(i, k)) / eps], where C is
// addressed through `cost_at` so one routine serves rows and columns.
template <typename CostAt>
void UpdatePotential(std::span<const double> log_w, std::span<const double> other,
                     CostAt cost_at, double epsilon, double sign, std::vector<double>& out,
                     std::vector<double>& scratch) {
  const double inv_eps = 1.0 / epsilon;
  scratch.resize(other.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < other.size(); ++k) {
      scratch[k] = log_w[k] + (other[k] - cost_at(i, k)) * inv_eps;
    }
    out[i] = sign * epsilon * LogSumExp(scratch);
  }
}

DualPotentials RunLoop(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                       const CostMatrix& cost, const SinkhornConfig& cfg,
                       LoopHistory* history) {
  cfg.Validate();
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cost is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                    " but measures have " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " atoms");
  }
  const auto log_a = LogWeights(a);
  const auto log_b = LogWeights(b);
  const double sign = cfg.update_form == UpdateForm::kSoftMin ? -1.0 : 1.0;

  DualPotentials pot;
  pot.f.assign(a.size(), 0.0);
  pot.g.assign(b.size(), 0.0);
  if (history) {
    history->f_iterates.assign(1, pot.f);
    history->g_iterates.assign(1, pot.g);
  }

  auto row_cost = [&](std::size_t i, std::size_t k) { return cost(i, k); };
  auto col_cost = [&](std::size_t j, std::size_t k) { return cost(k, j); };

  std::vector<double> f_next(a.size());
  std::vector<double> g_next(b.size());
  std::vector<double> scratch;
  for (int sweep = 1; sweep <= cfg.num_iterations; ++sweep) {
    UpdatePotential(log_b, pot.g, row_cost, cfg.epsilon, sign, f_next, scratch);
    CheckPotentials(f_next, cfg, "f", sweep);
    const auto& f_source = cfg.symmetric_update ? pot.f : f_next;
    UpdatePotential(log_a, f_source, col_cost, cfg.epsilon, sign, g_next, scratch);
    CheckPotentials(g_next, cfg, "g", sweep);

    double max_change = 0.0;
    for (std::size_t i = 0; i < f_next.size(); ++i) {
      max_change = std::max(max_change, std::abs(f_next[i] - pot.f[i]));
    }
    pot.f.swap(f_next);
    pot.g.swap(g_next);
    pot.iterations_run = sweep;
    if (history) {
      history->f_iterates.push_back(pot.f);
      history->g_iterates.push_back(pot.g);
    }
    if (cfg.early_stop && max_change < cfg.early_stop_tolerance * cfg.epsilon) break;
  }
  return pot;
}

// Softmax of row i of the f-update argument, written into `out`.
void RowWeights(std::span<const double> log_b, std::span<const double> g, const CostMatrix& cost,
                std::size_t i, double epsilon, std::vector<double>& out) {
  out.resize(g.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    out[k] = log_b[k] + (g[k] - cost(i, k)) / epsilon;
    peak = std::max(peak, out[k]);
  }
  double total = 0.0;
  for (double& v : out) total += (v = std::exp(v - peak));
  for (double& v : out) v /= total;
}

void ColumnWeights(std::span<const double> log_a, std::span<const double> f,
                   const CostMatrix& cost, std::size_t j, double epsilon,
                   std::vector<double>& out) {
  out.resize(f.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.size(); ++k) {
    out[k] = log_a[k] + (f[k] - cost(k, j)) / epsilon;
    peak = std::max(peak, out[k]);
  }
  double total = 0.0;
  for (double& v : out) total += (v = std::exp(v - peak));
  for (double& v : out) v /= total;
}

// d OT / d C by reverse accumulation through every recorded sweep.
Matrix UnrolledCostAdjoint(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                           const CostMatrix& cost, const SinkhornConfig& cfg,
                           const LoopHistory& history) {
  const auto log_a = LogWeights(a);
  const auto log_b = LogWeights(b);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double eps = cfg.epsilon;

  Matrix adj(n, m);
  std::vector<double> f_bar(a.weights().begin(), a.weights().end());
  std::vector<double> g_bar(b.weights().begin(), b.weights().end());
  std::vector<double> f_bar_prev(n), g_bar_prev(m), weights;

  const int sweeps = static_cast<int>(history.f_iterates.size()) - 1;
  for (int t = sweeps; t >= 1; --t) {
    const auto& g_in = history.g_iterates[t - 1];
    const auto& f_in = cfg.symmetric_update ? history.f_iterates[t - 1] : history.f_iterates[t];

    // g_j = -eps LSE_i[log a_i + (f_in_i - C_ij)/eps]
    std::fill(f_bar_prev.begin(), f_bar_prev.end(), 0.0);
    auto& f_in_bar = cfg.symmetric_update ? f_bar_prev : f_bar;
    for (std::size_t j = 0; j < m; ++j) {
      ColumnWeights(log_a, f_in, cost, j, eps, weights);
      for (std::size_t i = 0; i < n; ++i) {
        adj(i, j) += g_bar[j] * weights[i];
        f_in_bar[i] -= g_bar[j] * weights[i];
      }
    }

    // f_i = -eps LSE_k[log b_k + (g_in_k - C_ik)/eps]
    std::fill(g_bar_prev.begin(), g_bar_prev.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      RowWeights(log_b, g_in, cost, i, eps, weights);
      for (std::size_t k = 0; k < m; ++k) {
        adj(i, k) += f_bar[i] * weights[k];
        g_bar_prev[k] -= f_bar[i] * weights[k];
      }
    }

    g_bar.swap(g_bar_prev);
    if (cfg.symmetric_update) {
      f_bar.swap(f_bar_prev);
    } else {
      std::fill(f_bar.begin(), f_bar.end(), 0.0);
    }
  }
  return adj;
}

// Transport plan implied by fixed potentials.
Matrix EnvelopeCostAdjoint(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                           const CostMatrix& cost, const DualPotentials& pot, double epsilon) {
  Matrix plan(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      plan(i, j) = a.weights()[i] * b.weights()[j] *
                   std::exp((pot.f[i] + pot.g[j] - cost(i, j)) / epsilon);
    }
  }
  return plan;
}

// Adds scale * d/dy_j sum_ij adj_ij |x_i - y_j|^2 into grad.
void AccumulateTargetGradient(const EmpiricalMeasure& x, const EmpiricalMeasure& y,
                              const Matrix& adj, double scale, Matrix& grad) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    const auto yj = y.point(j);
    auto out = grad.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = 2.0 * scale * adj(i, j);
      const auto xi = x.point(i);
      for (std::size_t k = 0; k < yj.size(); ++k) out[k] += w * (yj[k] - xi[k]);
    }
  }
}

// Adds scale * d/dy_j sum_kl adj_kl |y_k - y_l|^2 into grad; y sits in both slots.
void AccumulateSelfGradient(const EmpiricalMeasure& y, const Matrix& adj, double scale,
                            Matrix& grad) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    const auto yj = y.point(j);
    auto out = grad.row(j);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double w = 2.0 * scale * (adj(k, j) + adj(j, k));
      const auto yk = y.point(k);
      for (std::size_t c = 0; c < yj.size(); ++c) out[c] += w * (yj[c] - yk[c]);
    }
  }
}

}  // namespace

void SinkhornConfig::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidConfig, "epsilon must be a positive finite number");
  }
  if (num_iterations < 1) throw Error(ErrorCode::kInvalidConfig, "num_iterations must be >= 1");
  if (!(max_abs_potential > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "max_abs_potential must be > 0");
  }
  if (early_stop && !(early_stop_tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "early_stop_tolerance must be > 0");
  }
}

double LogSumExp(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "LogSumExp of an empty list");
  const double peak = *std::max_element(values.begin(), values.end());
  if (std::isinf(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

DualPotentials SinkhornLoop(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                            const CostMatrix& cost, const SinkhornConfig& cfg) {
  return RunLoop(a, b, cost, cfg, nullptr);
}

double OtDualValue(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   const DualPotentials& potentials) {
  if (potentials.f.size() != a.size() || potentials.g.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "potential lengths do not match the measures");
  }
  double value = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) value += a.weights()[i] * potentials.f[i];
  for (std::size_t j = 0; j < b.size(); ++j) value += b.weights()[j] * potentials.g[j];
  return value;
}

DivergenceReport SinkhornDivergence(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                    const SinkhornConfig& cfg) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "measures live in different dimensions");
  }
  DivergenceReport report;
  report.potentials_ab = SinkhornLoop(a, b, ComputeCostMatrix(a, b), cfg);
  report.ot_ab = OtDualValue(a, b, report.potentials_ab);
  report.ot_aa = OtDualValue(a, a, SinkhornLoop(a, a, ComputeCostMatrix(a, a), cfg));
  report.ot_bb = OtDualValue(b, b, SinkhornLoop(b, b, ComputeCostMatrix(b, b), cfg));
  report.divergence = report.ot_ab - 0.5 * report.ot_aa - 0.5 * report.ot_bb;
  return report;
}

DivergenceWithGradient SinkhornDivergenceWithGradient(const EmpiricalMeasure& a,
                                                      const EmpiricalMeasure& b,
                                                      const SinkhornConfig& cfg,
                                                      GradientMode mode) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "measures live in different dimensions");
  }
  if (cfg.update_form != UpdateForm::kSoftMin) {
    throw Error(ErrorCode::kInvalidConfig, "gradients require the soft-min update form");
  }
  const bool unrolled = mode == GradientMode::kUnrolled;
  const CostMatrix cost_ab = ComputeCostMatrix(a, b);
  const CostMatrix cost_bb = ComputeCostMatrix(b, b);

  LoopHistory hist_ab, hist_bb;
  DivergenceWithGradient out;
  auto& report = out.report;
  report.potentials_ab = RunLoop(a, b, cost_ab, cfg, unrolled ? &hist_ab : nullptr);
  const DualPotentials pot_bb = RunLoop(b, b, cost_bb, cfg, unrolled ? &hist_bb : nullptr);
  report.ot_ab = OtDualValue(a, b, report.potentials_ab);
  report.ot_aa = OtDualValue(a, a, SinkhornLoop(a, a, ComputeCostMatrix(a, a), cfg));
  report.ot_bb = OtDualValue(b, b, pot_bb);
  report.divergence = report.ot_ab - 0.5 * report.ot_aa - 0.5 * report.ot_bb;

  const Matrix adj_ab = unrolled ? UnrolledCostAdjoint(a, b, cost_ab, cfg, hist_ab)
                                 : EnvelopeCostAdjoint(a, b, cost_ab, report.potentials_ab,
                                                       cfg.epsilon);
  const Matrix adj_bb = unrolled ? UnrolledCostAdjoint(b, b, cost_bb, cfg, hist_bb)
                                 : EnvelopeCostAdjoint(b, b, cost_bb, pot_bb, cfg.epsilon);

  out.gradient = Matrix(b.size(), b.dim());
  AccumulateTargetGradient(a, b, adj_ab, 1.0, out.gradient);
  AccumulateSelfGradient(b, adj_bb, -0.5, out.gradient);
  for (double v : out.gradient.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kGradientNonFinite, "divergence gradient");
  }
  return out;
}

Matrix DivergenceGradient(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                          const SinkhornConfig& cfg, GradientMode mode) {
  return SinkhornDivergenceWithGradient(a, b, cfg, mode).gradient;
}

}  // namespace sinkdist
