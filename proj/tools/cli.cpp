#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sinkdist/baselines.hpp"
#include "sinkdist/embedding_io.hpp"
#include "sinkdist/error.hpp"
#include "sinkdist/format.hpp"
#include "sinkdist/gradcheck.hpp"
#include "sinkdist/kd_harness.hpp"
#include "sinkdist/ot_oracle.hpp"
#include "sinkdist/sinkhorn.hpp"

namespace sinkdist::cli {
namespace {

enum class Format { kText, kJsonLines };

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

class Logger {
 public:
  Logger(std::ostream& err) : err_(err) {
    if (const char* env = std::getenv("SINKDIST_LOG")) {
      const std::string value = env;
      if (value == "info") level_ = LogLevel::kInfo;
      if (value == "debug") level_ = LogLevel::kDebug;
    }
  }
  void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::kInfo) err_ << "info: " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::kDebug) err_ << "debug: " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_ = LogLevel::kError;
};

struct Failure {
  std::string code;
};

using Value = std::variant<double, long long, std::string, std::vector<std::size_t>, Failure>;

struct Entry {
  std::string name;
  Value value;
};

void Emit(std::ostream& out, const std::vector<Entry>& entries, Format format) {
  for (const auto& entry : entries) {
    if (format == Format::kText) {
      out << entry.name << ' ';
      std::visit(
          [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out << FormatReal(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              out << v;
            } else if constexpr (std::is_same_v<T, std::string>) {
              out << v;
            } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
              for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
            } else {
              out << "error:" << v.code;
            }
          },
          entry.value);
      out << '\n';
    } else {
      nlohmann::json line;
      line["name"] = entry.name;
      std::visit(
          [&line](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Failure>) {
              line["error"] = v.code;
            } else if constexpr (std::is_same_v<T, double>) {
              // Same nine significant digits as text mode.
              line["value"] = std::stod(FormatReal(v));
            } else {
              line["value"] = v;
            }
          },
          entry.value);
      out << line.dump() << '\n';
    }
  }
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNumericalDivergence:
    case ErrorCode::kGradientNonFinite:
      return kExitNumerical;
    case ErrorCode::kNonUniformWeights:
    case ErrorCode::kSizeMismatch:
    case ErrorCode::kTooLarge:
      return kExitOraclePreconditions;
    case ErrorCode::kNonFiniteLoss:
      return kExitTrainingFailure;
    default:
      return kExitParse;
  }
}

struct CommonOptions {
  std::string format = "text";
  std::string out;
};

// Writes to --out when given, else to the process output stream.
class ResultSink {
 public:
  ResultSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::kParseError, path + ": cannot open for writing");
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

Format ParseFormat(const std::string& name) {
  return name == "json-lines" ? Format::kJsonLines : Format::kText;
}

double MeanCost(const CostMatrix& cost) {
  double sum = 0.0;
  for (double v : cost.entries().data()) sum += v;
  return sum / static_cast<double>(cost.entries().size());
}

std::vector<Entry> DivergenceEntries(const DivergenceReport& report) {
  return {{"ot_ab", report.ot_ab},
          {"ot_aa", report.ot_aa},
          {"ot_bb", report.ot_bb},
          {"divergence", report.divergence}};
}

void AppendMetrics(std::vector<Entry>& entries, const std::string& prefix,
                   const AlignmentMetrics& m) {
  entries.push_back({prefix + "cosine_distance_mean", m.cosine_distance.mean});
  entries.push_back({prefix + "cosine_distance_std", m.cosine_distance.stddev});
  entries.push_back({prefix + "mse_per_dim_mean", m.mse_per_dim.mean});
  entries.push_back({prefix + "mse_per_dim_std", m.mse_per_dim.stddev});
  entries.push_back({prefix + "mse_summed_mean", m.mse_summed.mean});
  entries.push_back({prefix + "mse_summed_std", m.mse_summed.stddev});
  entries.push_back(
      {prefix + "cosine_exclusions", static_cast<long long>(m.cosine_exclusions)});
}

double TokenAccuracy(const ToyModel& model, const SyntheticCorpus& corpus, bool student) {
  std::size_t hits = 0, total = 0;
  for (const auto& sample : corpus.samples) {
    const auto targets =
        student ? StudentTargets(corpus, sample) : TeacherTargets(corpus, sample);
    const auto decoded = GreedyDecode(model, sample.source, static_cast<int>(targets.size()));
    for (std::size_t t = 0; t < targets.size(); ++t) hits += decoded[t] == targets[t];
    total += targets.size();
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  CLI::App app{"Sinkhorn-divergence distillation toolkit", "sinkdist"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"text", "json-lines"}));
    sub->add_option("--out", common.out, "Output file (directory for align)");
  };

  // divergence
  std::string div_a, div_b;
  SinkhornConfig div_cfg;
  auto* div = app.add_subcommand("divergence", "Sinkhorn divergence between two embedding files");
  div->add_option("file_a", div_a)->required();
  div->add_option("file_b", div_b)->required();
  div->add_option("--epsilon", div_cfg.epsilon, "Entropic regularization")->capture_default_str();
  div->add_option("--iters", div_cfg.num_iterations, "Sinkhorn sweeps")->capture_default_str();
  add_common(div);

  // oracle
  std::string ora_a, ora_b;
  int ora_iters = 500;
  auto* ora = app.add_subcommand("oracle", "Exact assignment OT vs small-epsilon Sinkhorn");
  ora->add_option("file_a", ora_a)->required();
  ora->add_option("file_b", ora_b)->required();
  ora->add_option("--iters", ora_iters, "Sinkhorn sweeps")->capture_default_str();
  add_common(ora);

  // align
  TrainConfig align_cfg;
  int vocab = 16, samples = 64, source_len = 8, summary_len = 3, teacher_steps = 500;
  std::string kd_loss_name = "sinkhorn";
  auto* align = app.add_subcommand("align", "Teacher/student distillation experiment");
  align->add_option("--seed", align_cfg.seed)->capture_default_str();
  align->add_option("--vocab", vocab, "Tokens per language")->capture_default_str();
  align->add_option("--samples", samples)->capture_default_str();
  align->add_option("--source-len", source_len)->capture_default_str();
  align->add_option("--summary-len", summary_len)->capture_default_str();
  align->add_option("--steps", align_cfg.steps, "Student gradient steps")->capture_default_str();
  align->add_option("--teacher-steps", teacher_steps)->capture_default_str();
  align->add_option("--lambda", align_cfg.lambda, "KD weight")->capture_default_str();
  align->add_option("--lr", align_cfg.learning_rate)->capture_default_str();
  align->add_option("--d-model", align_cfg.d_model)->capture_default_str();
  align->add_option("--kd-loss", kd_loss_name)
      ->check(CLI::IsMember({"sinkhorn", "mean-cs", "mean-mse", "max-cs", "max-mse", "none"}))
      ->capture_default_str();
  align->add_option("--epsilon", align_cfg.sinkhorn.epsilon)->capture_default_str();
  align->add_option("--iters", align_cfg.sinkhorn.num_iterations)->capture_default_str();
  add_common(align);

  // metrics
  std::string met_a, met_b;
  auto* metrics = app.add_subcommand("metrics", "Pooled-vector distances between two files");
  metrics->add_option("file_a", met_a)->required();
  metrics->add_option("file_b", met_b)->required();
  add_common(metrics);

  // gradcheck
  std::string which;
  std::uint64_t gc_seed = 0;
  int gc_instances = 50;
  std::string gc_mode = "unrolled";
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  gradcheck->add_option("which", which)
      ->required()
      ->check(CLI::IsMember({"sinkhorn", "baselines", "harness"}));
  gradcheck->add_option("--seed", gc_seed)->capture_default_str();
  gradcheck->add_option("--instances", gc_instances)->capture_default_str();
  gradcheck->add_option("--mode", gc_mode, "Sinkhorn gradient estimator")
      ->check(CLI::IsMember({"unrolled", "envelope"}))
      ->capture_default_str();
  add_common(gradcheck);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  const Format format = ParseFormat(common.format);
  try {
    if (div->parsed()) {
      div_cfg.Validate();
      log.info("epsilon=" + FormatReal(div_cfg.epsilon) +
               " iters=" + std::to_string(div_cfg.num_iterations));
      const EmpiricalMeasure a = ReadEmbeddingFile(div_a);
      const EmpiricalMeasure b = ReadEmbeddingFile(div_b);
      if (a.dim() != b.dim()) {
        throw Error(ErrorCode::kDimensionMismatch, div_a + " and " + div_b +
                                                       " have different dimensions");
      }
      const DivergenceReport report = SinkhornDivergence(a, b, div_cfg);
      ResultSink sink(common.out, out);
      Emit(sink.stream(), DivergenceEntries(report), format);
      return kExitOk;
    }

    if (ora->parsed()) {
      const EmpiricalMeasure a = ReadEmbeddingFile(ora_a);
      const EmpiricalMeasure b = ReadEmbeddingFile(ora_b);
      if (a.dim() != b.dim()) {
        throw Error(ErrorCode::kDimensionMismatch, "files have different dimensions");
      }
      const AssignmentResult exact = ExactOtUniform(a, b);
      const CostMatrix cost = ComputeCostMatrix(a, b);
      const double mean_cost = MeanCost(cost);
      std::vector<Entry> entries{{"exact_cost", exact.cost}, {"permutation", exact.permutation}};
      if (mean_cost > 0.0) {
        SinkhornConfig cfg;
        cfg.epsilon = 1e-3 * mean_cost;
        cfg.num_iterations = ora_iters;
        const double value = OtDualValue(a, b, SinkhornLoop(a, b, cost, cfg));
        entries.push_back({"sinkhorn_epsilon", cfg.epsilon});
        entries.push_back({"sinkhorn_value", value});
        if (exact.cost > 0.0) {
          entries.push_back({"relative_error", std::abs(value - exact.cost) / exact.cost});
        } else {
          entries.push_back({"absolute_error", std::abs(value - exact.cost)});
        }
      } else {
        // All atoms coincide: every plan costs zero and epsilon would be zero.
        log.info("all costs are zero; skipping the Sinkhorn comparison");
        entries.push_back({"sinkhorn_value", 0.0});
        entries.push_back({"absolute_error", 0.0});
      }
      ResultSink sink(common.out, out);
      Emit(sink.stream(), entries, format);
      return kExitOk;
    }

    if (metrics->parsed()) {
      const EmpiricalMeasure a = ReadEmbeddingFile(met_a);
      const EmpiricalMeasure b = ReadEmbeddingFile(met_b);
      if (a.dim() != b.dim()) {
        throw Error(ErrorCode::kDimensionMismatch, "files have different dimensions");
      }
      std::vector<Entry> entries;
      for (Pooling mode : {Pooling::kMean, Pooling::kMax}) {
        const std::string prefix = mode == Pooling::kMean ? "mean_" : "max_";
        const PooledVector u = Pool(a, mode);
        const PooledVector v = Pool(b, mode);
        try {
          entries.push_back({prefix + "cs", CosineDistance(u, v)});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kZeroVector) throw;
          entries.push_back({prefix + "cs", Failure{"ZeroVector"}});
        }
        entries.push_back({prefix + "mse", MseDistance(u, v)});
        entries.push_back({prefix + "mse_summed", SummedSquaredError(u, v)});
      }
      ResultSink sink(common.out, out);
      Emit(sink.stream(), entries, format);
      return kExitOk;
    }

    if (gradcheck->parsed()) {
      GradCheckReport report;
      if (which == "sinkhorn") {
        report = CheckSinkhornGradients(
            gc_seed, gc_instances,
            gc_mode == "envelope" ? GradientMode::kEnvelope : GradientMode::kUnrolled);
      } else if (which == "baselines") {
        report = CheckBaselineGradients(gc_seed, gc_instances);
      } else {
        report = CheckHarnessGradients(gc_seed);
      }
      std::vector<Entry> entries;
      for (const auto& c : report.components) {
        entries.push_back({c.name, c.max_relative_error});
        if (!c.passed()) {
          entries.push_back({"failing_instance_seed", static_cast<long long>(c.worst_instance_seed)});
        }
      }
      entries.push_back({"status", std::string(report.passed() ? "pass" : "fail")});
      ResultSink sink(common.out, out);
      Emit(sink.stream(), entries, format);
      return report.passed() ? kExitOk : kExitCheckFailed;
    }

    if (align->parsed()) {
      align_cfg.kd_loss = *ParseKdLoss(kd_loss_name);
      align_cfg.Validate();
      const std::filesystem::path dir = common.out.empty() ? "align-out" : common.out;
      std::filesystem::create_directories(dir);

      const SyntheticCorpus corpus =
          GenerateCorpus(align_cfg.seed, vocab, samples, source_len, summary_len);
      TrainConfig teacher_cfg = align_cfg;
      teacher_cfg.steps = teacher_steps;
      log.info("training teacher for " + std::to_string(teacher_steps) + " steps");
      const ToyModel teacher = TeacherTrain(corpus, teacher_cfg);
      const ToyModel initial_student = InitialStudent(corpus, align_cfg);
      const AlignmentMetrics before = ComputeAlignmentMetrics(teacher, initial_student, corpus);
      log.info("training student for " + std::to_string(align_cfg.steps) + " steps");
      const StudentRun run = StudentTrain(corpus, teacher, align_cfg);
      const AlignmentMetrics after = ComputeAlignmentMetrics(teacher, run.student, corpus);

      const bool kd_active = align_cfg.lambda > 0.0 && align_cfg.kd_loss != KdLoss::kNone;
      std::vector<Entry> entries{
          {"seed", static_cast<long long>(align_cfg.seed)},
          {"kd_loss", std::string(KdLossName(align_cfg.kd_loss))},
          {"lambda", align_cfg.lambda},
          {"kd_status", std::string(kd_active ? "KD active" : "KD inactive")},
          {"l_kd_reduction", std::string("per-sample value, mean over samples")},
          {"teacher_token_accuracy", TokenAccuracy(teacher, corpus, false)},
          {"student_token_accuracy", TokenAccuracy(run.student, corpus, true)},
          {"initial_l_kd", run.trace.front().l_kd},
          {"final_l_kd", run.trace.back().l_kd},
      };
      AppendMetrics(entries, "initial_", before);
      AppendMetrics(entries, "final_", after);

      {
        std::ofstream trace(dir / "trace.csv");
        WriteTraceCsv(trace, run.trace);
        std::ofstream teacher_ckpt(dir / "teacher.ckpt");
        WriteCheckpoint(teacher_ckpt, teacher);
        std::ofstream student_ckpt(dir / "student.ckpt");
        WriteCheckpoint(student_ckpt, run.student);
        std::ofstream corpus_file(dir / "corpus.tsv");
        WriteCorpus(corpus_file, corpus);
        std::ofstream report(dir / "report.txt");
        Emit(report, entries, format);
        if (!trace || !teacher_ckpt || !student_ckpt || !corpus_file || !report) {
          throw Error(ErrorCode::kParseError, "failed writing results under " + dir.string());
        }
      }
      Emit(out, entries, format);
      return kExitOk;
    }
  } catch (const Error& e) {
    log.error(e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    log.error(e.what());
    return kExitParse;
  }
  return kExitParse;
}

}  // namespace sinkdist::cli
