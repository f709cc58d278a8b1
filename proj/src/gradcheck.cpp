#include "sinkdist/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sinkdist/baselines.hpp"
#include "sinkdist/kd_harness.hpp"
#include "sinkdist/measures.hpp"
#include "sinkdist/rng.hpp"
#include "sinkdist/sinkhorn.hpp"

namespace sinkdist {
namespace {

Matrix RandomCloud(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (double& v : m.data()) v = rng.uniform();
  return m;
}

void Record(GradCheckComponent& component, double error, std::uint64_t instance_seed) {
  ++component.instances;
  if (error > component.max_relative_error || component.instances == 1) {
    component.max_relative_error = std::max(component.max_relative_error, error);
    component.worst_instance_seed = instance_seed;
  }
}

double MaxRelativeError(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    worst = std::max(worst, RelativeError(analytic[k], numeric[k]));
  }
  return worst;
}

struct SinkhornCase {
  const char* name;
  double epsilon;
  int iterations;
};

constexpr SinkhornCase kSinkhornCases[] = {
    {"sinkhorn eps=0.0025 iters=14", 0.0025, 14},
    {"sinkhorn eps=0.01 iters=14", 0.01, 14},
    {"sinkhorn eps=0.1 iters=100", 0.1, 100},
};

}  // namespace

double RelativeError(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

std::vector<double> CentralDifference(const std::function<double()>& f, std::span<double> x,
                                      double step) {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + step;
    const double plus = f();
    x[k] = saved - step;
    const double minus = f();
    x[k] = saved;
    out[k] = (plus - minus) / (2.0 * step);
  }
  return out;
}

bool GradCheckReport::passed() const {
  return std::all_of(components.begin(), components.end(),
                     [](const GradCheckComponent& c) { return c.passed(); });
}

GradCheckReport CheckSinkhornGradients(std::uint64_t seed, int instances, GradientMode mode) {
  GradCheckReport report;
  for (const auto& c : kSinkhornCases) {
    GradCheckComponent component{c.name, 0.0, kSinkhornGradTolerance, 0, 0};
    SinkhornConfig cfg;
    cfg.epsilon = c.epsilon;
    cfg.num_iterations = c.iterations;
    for (int k = 0; k < instances; ++k) {
      const std::uint64_t instance_seed = DeriveSeed(seed, static_cast<std::uint64_t>(k));
      Rng rng(instance_seed);
      const std::size_t d = 1 + rng.below(4);
      const EmpiricalMeasure a = MakeMeasure(RandomCloud(rng, 1 + rng.below(6), d));
      Matrix target = RandomCloud(rng, 1 + rng.below(6), d);

      const Matrix analytic = DivergenceGradient(a, MakeMeasure(target), cfg, mode);
      const auto numeric = CentralDifference(
          [&] { return SinkhornDivergence(a, MakeMeasure(target), cfg).divergence; },
          target.data(), kFiniteDifferenceStep);
      Record(component, MaxRelativeError(analytic.data(), numeric), instance_seed);
    }
    report.components.push_back(component);
  }
  return report;
}

GradCheckReport CheckBaselineGradients(std::uint64_t seed, int instances) {
  GradCheckReport report;
  for (BaselineVariant variant : {BaselineVariant::kMeanCs, BaselineVariant::kMeanMse,
                                  BaselineVariant::kMaxCs, BaselineVariant::kMaxMse}) {
    GradCheckComponent component{std::string(BaselineVariantName(variant)), 0.0,
                                 kBaselineGradTolerance, 0, 0};
    for (int k = 0; k < instances; ++k) {
      const std::uint64_t instance_seed = DeriveSeed(seed, static_cast<std::uint64_t>(k));
      Rng rng(instance_seed);
      const std::size_t d = 1 + rng.below(6);
      Matrix t(1 + rng.below(6), d);
      Matrix s(1 + rng.below(6), d);
      for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
      for (double& v : s.data()) v = rng.uniform(-1.0, 1.0);
      const EmpiricalMeasure teacher = MakeMeasure(t);

      const Matrix analytic = BaselineKdLoss(teacher, MakeMeasure(s), variant).gradient;
      const auto numeric = CentralDifference(
          [&] { return BaselineKdLoss(teacher, MakeMeasure(s), variant).value; }, s.data(),
          kFiniteDifferenceStep);
      Record(component, MaxRelativeError(analytic.data(), numeric), instance_seed);
    }
    report.components.push_back(component);
  }
  return report;
}

GradCheckReport CheckHarnessGradients(std::uint64_t seed) {
  struct Case {
    KdLoss loss;
    double lambda;
  };
  const Case cases[] = {{KdLoss::kSinkhorn, 1.0}, {KdLoss::kSinkhorn, 0.0},
                        {KdLoss::kMeanCs, 1.0},   {KdLoss::kMeanMse, 1.0},
                        {KdLoss::kMaxCs, 1.0},    {KdLoss::kMaxMse, 1.0},
                        {KdLoss::kNone, 1.0}};
  GradCheckReport report;
  const std::uint64_t instance_seed = DeriveSeed(seed, 0);
  const SyntheticCorpus corpus = GenerateCorpus(instance_seed, 4, 1, 4, 2);
  for (const auto& c : cases) {
    TrainConfig cfg;
    cfg.kd_loss = c.loss;
    cfg.lambda = c.lambda;
    cfg.d_model = 4;
    cfg.seed = instance_seed;
    const ToyModel teacher = InitialTeacher(corpus, cfg);
    ToyModel student = InitialStudent(corpus, cfg);

    GradCheckComponent component{"harness " + std::string(KdLossName(c.loss)) +
                                     " lambda=" + (c.lambda == 0.0 ? "0" : "1"),
                                 0.0, kHarnessGradTolerance, instance_seed, 1};
    const ToyModel analytic = StudentObjective(corpus, teacher, student, cfg).gradient;
    auto params = student.parameters();
    const auto analytic_params = analytic.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto numeric = CentralDifference(
          [&] { return StudentObjective(corpus, teacher, student, cfg).l_total; },
          params[p]->data(), kFiniteDifferenceStep);
      component.max_relative_error = std::max(
          component.max_relative_error, MaxRelativeError(analytic_params[p]->data(), numeric));
    }
    report.components.push_back(component);
  }
  return report;
}

}  // namespace sinkdist
