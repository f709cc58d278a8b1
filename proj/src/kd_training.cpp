#include <cmath>
#include <ostream>
#include <string>

#include "sinkdist/baselines.hpp"
#include "sinkdist/error.hpp"
#include "sinkdist/format.hpp"
#include "sinkdist/kd_harness.hpp"
#include "sinkdist/rng.hpp"
#include "toy_model_internal.hpp"

namespace sinkdist {
namespace {

constexpr std::uint64_t kTeacherStream = 1;
constexpr std::uint64_t kStudentStream = 2;

struct KdTerm {
  double value = 0.0;
  Matrix student_grad;
};

KdTerm KdDistance(const Matrix& teacher_states, const Matrix& student_states,
                  const TrainConfig& cfg) {
  const EmpiricalMeasure t = MakeMeasure(teacher_states);
  const EmpiricalMeasure s = MakeMeasure(student_states);
  switch (cfg.kd_loss) {
    case KdLoss::kSinkhorn: {
      auto result = SinkhornDivergenceWithGradient(t, s, cfg.sinkhorn);
      return {result.report.divergence, std::move(result.gradient)};
    }
    case KdLoss::kMeanCs:
    case KdLoss::kMeanMse:
    case KdLoss::kMaxCs:
    case KdLoss::kMaxMse: {
      const BaselineVariant variant = cfg.kd_loss == KdLoss::kMeanCs    ? BaselineVariant::kMeanCs
                                      : cfg.kd_loss == KdLoss::kMeanMse ? BaselineVariant::kMeanMse
                                      : cfg.kd_loss == KdLoss::kMaxCs   ? BaselineVariant::kMaxCs
                                                                        : BaselineVariant::kMaxMse;
      auto result = BaselineKdLoss(t, s, variant);
      return {result.value, std::move(result.gradient)};
    }
    case KdLoss::kNone:
      break;
  }
  return {0.0, Matrix(student_states.rows(), student_states.cols())};
}

void Descend(ToyModel& model, const ToyModel& grad, double learning_rate) {
  auto params = model.parameters();
  const auto grads = grad.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p]->data();
    const auto g = grads[p]->data();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] -= learning_rate * g[k];
  }
}

MeanStd Summarize(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace

std::string_view KdLossName(KdLoss loss) {
  switch (loss) {
    case KdLoss::kSinkhorn: return "sinkhorn";
    case KdLoss::kMeanCs: return "mean-cs";
    case KdLoss::kMeanMse: return "mean-mse";
    case KdLoss::kMaxCs: return "max-cs";
    case KdLoss::kMaxMse: return "max-mse";
    case KdLoss::kNone: return "none";
  }
  return "?";
}

std::optional<KdLoss> ParseKdLoss(std::string_view name) {
  for (KdLoss loss : {KdLoss::kSinkhorn, KdLoss::kMeanCs, KdLoss::kMeanMse, KdLoss::kMaxCs,
                      KdLoss::kMaxMse, KdLoss::kNone}) {
    if (KdLossName(loss) == name) return loss;
  }
  return std::nullopt;
}

void TrainConfig::Validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidConfig, "lambda must be a finite value >= 0");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "learning rate must be > 0");
  }
  if (steps < 1) throw Error(ErrorCode::kInvalidConfig, "steps must be >= 1");
  if (d_model < 1) throw Error(ErrorCode::kInvalidConfig, "d_model must be >= 1");
  if (!(init_scale > 0.0)) throw Error(ErrorCode::kInvalidConfig, "init_scale must be > 0");
  sinkhorn.Validate();
}

TeacherObjectiveValue TeacherObjective(const SyntheticCorpus& corpus, const ToyModel& teacher) {
  TeacherObjectiveValue out;
  out.gradient = teacher.ZerosLike();
  const double scale = 1.0 / static_cast<double>(corpus.samples.size());
  for (const auto& sample : corpus.samples) {
    const auto targets = TeacherTargets(corpus, sample);
    const auto pass =
        internal::RunForward(teacher, sample.source, static_cast<int>(targets.size()));
    Matrix hidden_grad(pass.hidden.rows(), pass.hidden.cols());
    out.l_mls +=
        internal::CrossEntropyBackward(teacher, pass, targets, scale, hidden_grad, out.gradient);
    internal::HiddenBackward(teacher, pass, sample.source, hidden_grad, out.gradient);
  }
  return out;
}

StudentObjectiveValue StudentObjective(const SyntheticCorpus& corpus, const ToyModel& teacher,
                                       const ToyModel& student, const TrainConfig& cfg,
                                       const std::vector<Matrix>* teacher_states) {
  StudentObjectiveValue out;
  out.gradient = student.ZerosLike();
  const double scale = 1.0 / static_cast<double>(corpus.samples.size());
  const bool kd_active = cfg.kd_loss != KdLoss::kNone;
  for (std::size_t s = 0; s < corpus.samples.size(); ++s) {
    const auto& sample = corpus.samples[s];
    const auto targets = StudentTargets(corpus, sample);
    const int positions = static_cast<int>(targets.size());
    const auto pass = internal::RunForward(student, sample.source, positions);
    Matrix hidden_grad(pass.hidden.rows(), pass.hidden.cols());
    out.l_cls +=
        internal::CrossEntropyBackward(student, pass, targets, scale, hidden_grad, out.gradient);

    if (kd_active) {
      const Matrix teacher_h = teacher_states
                                   ? (*teacher_states)[s]
                                   : DecoderStates(teacher, sample.source,
                                                   static_cast<int>(
                                                       TeacherTargets(corpus, sample).size()));
      const KdTerm kd = KdDistance(teacher_h, pass.hidden, cfg);
      out.l_kd += scale * kd.value;
      // lambda = 0 still reports L_KD but sends no gradient.
      if (cfg.lambda != 0.0) {
        auto dh = hidden_grad.data();
        const auto g = kd.student_grad.data();
        for (std::size_t k = 0; k < dh.size(); ++k) dh[k] += cfg.lambda * scale * g[k];
      }
    }
    internal::HiddenBackward(student, pass, sample.source, hidden_grad, out.gradient);
  }
  out.l_total = out.l_cls + cfg.lambda * out.l_kd;
  return out;
}

ToyModel InitialTeacher(const SyntheticCorpus& corpus, const TrainConfig& cfg) {
  return InitializeModel(corpus, cfg.d_model, DeriveSeed(cfg.seed, kTeacherStream),
                         cfg.init_scale);
}

ToyModel InitialStudent(const SyntheticCorpus& corpus, const TrainConfig& cfg) {
  return InitializeModel(corpus, cfg.d_model, DeriveSeed(cfg.seed, kStudentStream),
                         cfg.init_scale);
}

ToyModel TeacherTrain(const SyntheticCorpus& corpus, const TrainConfig& cfg) {
  cfg.Validate();
  if (corpus.samples.empty()) throw Error(ErrorCode::kInvalidConfig, "empty corpus");
  ToyModel teacher = InitialTeacher(corpus, cfg);
  for (int step = 0; step < cfg.steps; ++step) {
    const auto objective = TeacherObjective(corpus, teacher);
    if (!std::isfinite(objective.l_mls)) {
      throw Error(ErrorCode::kNonFiniteLoss, "teacher loss at step " + std::to_string(step));
    }
    Descend(teacher, objective.gradient, cfg.learning_rate);
  }
  return teacher;
}

StudentRun StudentTrain(const SyntheticCorpus& corpus, const ToyModel& teacher,
                        const TrainConfig& cfg, std::optional<ToyModel> initial) {
  cfg.Validate();
  if (corpus.samples.empty()) throw Error(ErrorCode::kInvalidConfig, "empty corpus");
  StudentRun run;
  run.student = initial ? std::move(*initial) : InitialStudent(corpus, cfg);

  std::vector<Matrix> teacher_states;
  teacher_states.reserve(corpus.samples.size());
  for (const auto& sample : corpus.samples) {
    teacher_states.push_back(DecoderStates(
        teacher, sample.source, static_cast<int>(TeacherTargets(corpus, sample).size())));
  }

  run.trace.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    const auto objective = StudentObjective(corpus, teacher, run.student, cfg, &teacher_states);
    if (!std::isfinite(objective.l_total)) {
      throw Error(ErrorCode::kNonFiniteLoss, "student loss at step " + std::to_string(step));
    }
    run.trace.push_back({step, objective.l_cls, objective.l_kd, objective.l_total});
    Descend(run.student, objective.gradient, cfg.learning_rate);
  }
  return run;
}

AlignmentMetrics ComputeAlignmentMetrics(const ToyModel& teacher, const ToyModel& student,
                                         const SyntheticCorpus& corpus) {
  if (corpus.samples.size() < 2) {
    throw Error(ErrorCode::kInvalidConfig, "alignment metrics need at least two samples");
  }
  std::vector<double> cosine, mse, summed;
  AlignmentMetrics out;
  for (const auto& sample : corpus.samples) {
    const int t_positions = static_cast<int>(TeacherTargets(corpus, sample).size());
    const int s_positions = static_cast<int>(StudentTargets(corpus, sample).size());
    const PooledVector u =
        Pool(MakeMeasure(DecoderStates(teacher, sample.source, t_positions)), Pooling::kMean);
    const PooledVector v =
        Pool(MakeMeasure(DecoderStates(student, sample.source, s_positions)), Pooling::kMean);
    mse.push_back(MseDistance(u, v));
    summed.push_back(SummedSquaredError(u, v));
    try {
      cosine.push_back(CosineDistance(u, v));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroVector) throw;
      ++out.cosine_exclusions;
    }
  }
  out.samples = corpus.samples.size();
  out.cosine_distance = Summarize(cosine);
  out.mse_per_dim = Summarize(mse);
  out.mse_summed = Summarize(summed);
  return out;
}

void WriteTraceCsv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "step,l_cls,l_kd,l_total\n";
  for (const auto& row : trace) {
    out << row.step << ',' << FormatReal(row.l_cls) << ',' << FormatReal(row.l_kd) << ','
        << FormatReal(row.l_total) << '\n';
  }
}

}  // namespace sinkdist
