#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sinkdist/matrix.hpp"
#include "sinkdist/sinkhorn.hpp"

namespace sinkdist {

// ---------------------------------------------------------------------------
// Synthetic corpus
//
// Language A owns tokens [0, V), language B owns [V, 2V). Every source is N
// tokens from A, the monolingual summary is its first M tokens and the
// cross-lingual summary maps each of those through x -> x + offset, where
// offset is V (or 0 for the identity-mapped variant, which makes B = A).
// ---------------------------------------------------------------------------

enum class CrossMapping { kShifted, kIdentity };

struct CorpusSample {
  std::vector<int> source;
  std::vector<int> mono_summary;
  std::vector<int> cross_summary;
};

struct SyntheticCorpus {
  int vocab_size = 0;  // V, per language
  int source_length = 0;
  int summary_length = 0;
  CrossMapping mapping = CrossMapping::kShifted;
  std::vector<CorpusSample> samples;

  int bos_token() const { return 2 * vocab_size; }
  int eos_token() const { return 2 * vocab_size + 1; }
  int total_vocab() const { return 2 * vocab_size + 2; }
  // Decoder positions per summary: M tokens plus EOS.
  int target_positions() const { return summary_length + 1; }
};

// Throws kInvalidLengths unless V >= 4, N > M >= 1 and every source token is
// in [0, V).
CorpusSample MakeSample(std::vector<int> source, int vocab_size, int summary_length,
                        CrossMapping mapping = CrossMapping::kShifted);

SyntheticCorpus GenerateCorpus(std::uint64_t seed, int vocab_size, int num_samples,
                               int source_length, int summary_length,
                               CrossMapping mapping = CrossMapping::kShifted);

// Teacher-forced target sequences (summary followed by EOS).
std::vector<int> TeacherTargets(const SyntheticCorpus& corpus, const CorpusSample& sample);
std::vector<int> StudentTargets(const SyntheticCorpus& corpus, const CorpusSample& sample);

// ---------------------------------------------------------------------------
// Toy encoder-decoder
//
// Encoder: e_n = E[x_n] + P[n]. Decoder state for target position t is a
// single attention readout h_t = sum_n softmax_n(q_t . e_n / sqrt(d)) e_n,
// and P(token | t) = softmax(h_t W). Decoder states never see previous
// target tokens, so teacher forcing only fixes the target length.
// ---------------------------------------------------------------------------

struct ToyModel {
  int vocab_per_language = 0;
  int d_model = 16;
  Matrix token_embeddings;   // (2V + 2) x d
  Matrix source_positions;   // N x d
  Matrix position_queries;   // M_max x d
  Matrix output_projection;  // d x (2V + 2)

  int max_target_len() const { return static_cast<int>(position_queries.rows()); }
  int max_source_len() const { return static_cast<int>(source_positions.rows()); }

  std::array<Matrix*, 4> parameters() {
    return {&token_embeddings, &source_positions, &position_queries, &output_projection};
  }
  std::array<const Matrix*, 4> parameters() const {
    return {&token_embeddings, &source_positions, &position_queries, &output_projection};
  }
  static constexpr std::array<std::string_view, 4> kParameterNames = {
      "token_embeddings", "source_positions", "position_queries", "output_projection"};

  // Same shapes, all zeros.
  ToyModel ZerosLike() const;

  friend bool operator==(const ToyModel&, const ToyModel&) = default;
};

ToyModel InitializeModel(const SyntheticCorpus& corpus, int d_model, std::uint64_t seed,
                         double init_scale);

// Decoder states for the first `positions` target slots, one row each.
Matrix DecoderStates(const ToyModel& model, std::span<const int> source, int positions);

// Greedy argmax token per target position.
std::vector<int> GreedyDecode(const ToyModel& model, std::span<const int> source, int positions);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

enum class KdLoss { kSinkhorn, kMeanCs, kMeanMse, kMaxCs, kMaxMse, kNone };

std::string_view KdLossName(KdLoss loss);
std::optional<KdLoss> ParseKdLoss(std::string_view name);

struct TrainConfig {
  double lambda = 1.0;
  double learning_rate = 0.5;
  int steps = 500;
  std::uint64_t seed = 42;
  KdLoss kd_loss = KdLoss::kSinkhorn;
  SinkhornConfig sinkhorn;
  int d_model = 16;
  double init_scale = 0.5;

  // Throws kInvalidConfig.
  void Validate() const;
};

struct TraceRow {
  int step = 0;
  double l_cls = 0.0;
  double l_kd = 0.0;
  double l_total = 0.0;
};

// Batch-mean objective value and its gradient with respect to the model.
struct TeacherObjectiveValue {
  double l_mls = 0.0;
  ToyModel gradient;
};
TeacherObjectiveValue TeacherObjective(const SyntheticCorpus& corpus, const ToyModel& teacher);

// L = L_CLS + lambda * L_KD, each averaged over samples. L_KD compares the
// frozen teacher's decoder states with the student's; its gradient reaches the
// student only through the student's states. `teacher_states` may carry a
// precomputed DecoderStates per sample.
struct StudentObjectiveValue {
  double l_cls = 0.0;
  double l_kd = 0.0;
  double l_total = 0.0;
  ToyModel gradient;
};
StudentObjectiveValue StudentObjective(const SyntheticCorpus& corpus, const ToyModel& teacher,
                                       const ToyModel& student, const TrainConfig& cfg,
                                       const std::vector<Matrix>* teacher_states = nullptr);

ToyModel InitialTeacher(const SyntheticCorpus& corpus, const TrainConfig& cfg);
ToyModel InitialStudent(const SyntheticCorpus& corpus, const TrainConfig& cfg);

// Plain gradient descent on L_MLS. Throws kNonFiniteLoss.
ToyModel TeacherTrain(const SyntheticCorpus& corpus, const TrainConfig& cfg);

struct StudentRun {
  ToyModel student;
  std::vector<TraceRow> trace;  // row k: losses at the parameters before update k
};

// Plain gradient descent on L_CLS + lambda * L_KD with the teacher frozen.
// Starts from InitialStudent unless `initial` is given. Throws kNonFiniteLoss
// naming the step; Sinkhorn errors propagate.
StudentRun StudentTrain(const SyntheticCorpus& corpus, const ToyModel& teacher,
                        const TrainConfig& cfg, std::optional<ToyModel> initial = std::nullopt);

// ---------------------------------------------------------------------------
// Alignment metrics: per sample, mean-pool teacher and student decoder states
// and compare the pooled vectors; report mean and sample standard deviation.
// ---------------------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

struct AlignmentMetrics {
  MeanStd cosine_distance;
  MeanStd mse_per_dim;
  MeanStd mse_summed;
  std::size_t samples = 0;
  std::size_t cosine_exclusions = 0;  // samples dropped for a zero pooled vector
};

// Throws kInvalidConfig with fewer than two samples.
AlignmentMetrics ComputeAlignmentMetrics(const ToyModel& teacher, const ToyModel& student,
                                         const SyntheticCorpus& corpus);

// ---------------------------------------------------------------------------
// Text I/O
// ---------------------------------------------------------------------------

void WriteTraceCsv(std::ostream& out, std::span<const TraceRow> trace);
void WriteCheckpoint(std::ostream& out, const ToyModel& model);
ToyModel ReadCheckpoint(std::istream& in);  // throws kParseError
void WriteCorpus(std::ostream& out, const SyntheticCorpus& corpus);

}  // namespace sinkdist
