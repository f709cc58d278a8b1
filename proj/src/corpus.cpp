#include <ostream>
#include <string>

#include "sinkdist/error.hpp"
#include "sinkdist/kd_harness.hpp"
#include "sinkdist/rng.hpp"

namespace sinkdist {
namespace {

void CheckShape(int vocab_size, int source_length, int summary_length) {
  if (vocab_size < 4) {
    throw Error(ErrorCode::kInvalidLengths, "vocabulary size must be >= 4");
  }
  if (summary_length < 1 || summary_length >= source_length) {
    throw Error(ErrorCode::kInvalidLengths,
                "need N > M >= 1, got N=" + std::to_string(source_length) +
                    " M=" + std::to_string(summary_length));
  }
}

}  // namespace

CorpusSample MakeSample(std::vector<int> source, int vocab_size, int summary_length,
                        CrossMapping mapping) {
  CheckShape(vocab_size, static_cast<int>(source.size()), summary_length);
  for (int token : source) {
    if (token < 0 || token >= vocab_size) {
      throw Error(ErrorCode::kInvalidLengths,
                  "source token " + std::to_string(token) + " outside [0, V)");
    }
  }
  const int offset = mapping == CrossMapping::kShifted ? vocab_size : 0;
  CorpusSample sample;
  sample.mono_summary.assign(source.begin(), source.begin() + summary_length);
  sample.cross_summary.reserve(summary_length);
  for (int token : sample.mono_summary) sample.cross_summary.push_back(token + offset);
  sample.source = std::move(source);
  return sample;
}

SyntheticCorpus GenerateCorpus(std::uint64_t seed, int vocab_size, int num_samples,
                               int source_length, int summary_length, CrossMapping mapping) {
  CheckShape(vocab_size, source_length, summary_length);
  if (num_samples < 1) throw Error(ErrorCode::kInvalidLengths, "need at least one sample");

  SyntheticCorpus corpus;
  corpus.vocab_size = vocab_size;
  corpus.source_length = source_length;
  corpus.summary_length = summary_length;
  corpus.mapping = mapping;
  corpus.samples.reserve(num_samples);

  Rng rng(seed);
  for (int s = 0; s < num_samples; ++s) {
    std::vector<int> source(source_length);
    for (int& token : source) token = static_cast<int>(rng.below(vocab_size));
    corpus.samples.push_back(MakeSample(std::move(source), vocab_size, summary_length, mapping));
  }
  return corpus;
}

std::vector<int> TeacherTargets(const SyntheticCorpus& corpus, const CorpusSample& sample) {
  std::vector<int> out = sample.mono_summary;
  out.push_back(corpus.eos_token());
  return out;
}

std::vector<int> StudentTargets(const SyntheticCorpus& corpus, const CorpusSample& sample) {
  std::vector<int> out = sample.cross_summary;
  out.push_back(corpus.eos_token());
  return out;
}

void WriteCorpus(std::ostream& out, const SyntheticCorpus& corpus) {
  auto write_list = [&out](const std::vector<int>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out << ' ';
      out << tokens[i];
    }
  };
  for (const auto& sample : corpus.samples) {
    write_list(sample.source);
    out << '\t';
    write_list(sample.mono_summary);
    out << '\t';
    write_list(sample.cross_summary);
    out << '\n';
  }
}

}  // namespace sinkdist
