#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sinkdist/error.hpp"
#include "sinkdist/kd_harness.hpp"
#include "sinkdist/rng.hpp"
#include "toy_model_internal.hpp"

namespace sinkdist {
namespace {

void SoftmaxInPlace(std::span<double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  double total = 0.0;
  for (double& v : values) total += (v = std::exp(v - peak));
  for (double& v : values) v /= total;
}

void CheckInputs(const ToyModel& model, std::span<const int> source, int positions) {
  if (static_cast<int>(source.size()) > model.max_source_len()) {
    throw Error(ErrorCode::kInvalidLengths, "source longer than the model's position table");
  }
  if (positions < 1 || positions > model.max_target_len()) {
    throw Error(ErrorCode::kInvalidLengths, "target positions outside the model's query table");
  }
  const int vocab = static_cast<int>(model.token_embeddings.rows());
  for (int token : source) {
    if (token < 0 || token >= vocab) throw Error(ErrorCode::kInvalidLengths, "token out of range");
  }
}

}  // namespace

namespace internal {

ForwardPass RunForward(const ToyModel& model, std::span<const int> source, int positions) {
  CheckInputs(model, source, positions);
  const std::size_t d = static_cast<std::size_t>(model.d_model);
  const std::size_t n = source.size();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  ForwardPass pass;
  pass.encoded = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto emb = model.token_embeddings.row(source[i]);
    const auto pos = model.source_positions.row(i);
    auto out = pass.encoded.row(i);
    for (std::size_t k = 0; k < d; ++k) out[k] = emb[k] + pos[k];
  }

  pass.attention = Matrix(positions, n);
  pass.hidden = Matrix(positions, d);
  for (int t = 0; t < positions; ++t) {
    auto scores = pass.attention.row(t);
    const auto query = model.position_queries.row(t);
    for (std::size_t i = 0; i < n; ++i) scores[i] = Dot(query, pass.encoded.row(i)) * inv_sqrt_d;
    SoftmaxInPlace(scores);
    auto h = pass.hidden.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = pass.encoded.row(i);
      for (std::size_t k = 0; k < d; ++k) h[k] += scores[i] * e[k];
    }
  }
  return pass;
}

double CrossEntropyBackward(const ToyModel& model, const ForwardPass& pass,
                            std::span<const int> targets, double scale, Matrix& hidden_grad,
                            ToyModel& grad) {
  const Matrix& w = model.output_projection;
  const std::size_t d = w.rows();
  const std::size_t vocab = w.cols();
  std::vector<double> logits(vocab);
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto h = pass.hidden.row(t);
    std::fill(logits.begin(), logits.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      const auto w_row = w.row(k);
      for (std::size_t v = 0; v < vocab; ++v) logits[v] += h[k] * w_row[v];
    }
    SoftmaxInPlace(logits);
    const int gold = targets[t];
    loss -= scale * std::log(logits[gold]);

    logits[gold] -= 1.0;  // now d(-log p_gold)/d logits
    auto dh = hidden_grad.row(t);
    for (std::size_t k = 0; k < d; ++k) {
      const auto w_row = w.row(k);
      auto gw_row = grad.output_projection.row(k);
      double acc = 0.0;
      for (std::size_t v = 0; v < vocab; ++v) {
        gw_row[v] += scale * h[k] * logits[v];
        acc += w_row[v] * logits[v];
      }
      dh[k] += scale * acc;
    }
  }
  return loss;
}

void HiddenBackward(const ToyModel& model, const ForwardPass& pass, std::span<const int> source,
                    const Matrix& hidden_grad, ToyModel& grad) {
  const std::size_t d = static_cast<std::size_t>(model.d_model);
  const std::size_t n = source.size();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix encoded_grad(n, d);
  std::vector<double> score_grad(n);

  for (std::size_t t = 0; t < pass.hidden.rows(); ++t) {
    const auto dh = hidden_grad.row(t);
    const auto attn = pass.attention.row(t);
    // h_t = sum_i a_ti e_i
    double weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      score_grad[i] = Dot(dh, pass.encoded.row(i));
      weighted += attn[i] * score_grad[i];
      auto de = encoded_grad.row(i);
      for (std::size_t k = 0; k < d; ++k) de[k] += attn[i] * dh[k];
    }
    // softmax backward, then s_ti = q_t . e_i / sqrt(d)
    const auto query = model.position_queries.row(t);
    auto dq = grad.position_queries.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      const double ds = attn[i] * (score_grad[i] - weighted) * inv_sqrt_d;
      const auto e = pass.encoded.row(i);
      auto de = encoded_grad.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        dq[k] += ds * e[k];
        de[k] += ds * query[k];
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto de = encoded_grad.row(i);
    auto demb = grad.token_embeddings.row(source[i]);
    auto dpos = grad.source_positions.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      demb[k] += de[k];
      dpos[k] += de[k];
    }
  }
}

}  // namespace internal

ToyModel ToyModel::ZerosLike() const {
  ToyModel out = *this;
  for (Matrix* p : out.parameters()) p->fill(0.0);
  return out;
}

ToyModel InitializeModel(const SyntheticCorpus& corpus, int d_model, std::uint64_t seed,
                         double init_scale) {
  if (d_model < 1) throw Error(ErrorCode::kInvalidConfig, "d_model must be >= 1");
  ToyModel model;
  model.vocab_per_language = corpus.vocab_size;
  model.d_model = d_model;
  const std::size_t vocab = static_cast<std::size_t>(corpus.total_vocab());
  const std::size_t d = static_cast<std::size_t>(d_model);
  model.token_embeddings = Matrix(vocab, d);
  model.source_positions = Matrix(corpus.source_length, d);
  model.position_queries = Matrix(corpus.target_positions(), d);
  model.output_projection = Matrix(d, vocab);
  Rng rng(seed);
  for (Matrix* p : model.parameters()) {
    for (double& v : p->data()) v = init_scale * rng.normal();
  }
  return model;
}

Matrix DecoderStates(const ToyModel& model, std::span<const int> source, int positions) {
  return internal::RunForward(model, source, positions).hidden;
}

std::vector<int> GreedyDecode(const ToyModel& model, std::span<const int> source, int positions) {
  const Matrix hidden = DecoderStates(model, source, positions);
  const Matrix& w = model.output_projection;
  std::vector<int> out;
  for (std::size_t t = 0; t < hidden.rows(); ++t) {
    int best = 0;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < w.cols(); ++v) {
      double logit = 0.0;
      for (std::size_t k = 0; k < w.rows(); ++k) logit += hidden(t, k) * w(k, v);
      if (logit > best_logit) {
        best_logit = logit;
        best = static_cast<int>(v);
      }
    }
    out.push_back(best);
  }
  return out;
}

void WriteCheckpoint(std::ostream& out, const ToyModel& model) {
  out << "toy-model v1 " << model.vocab_per_language << ' ' << model.d_model << ' '
      << model.max_target_len() << '\n';
  char buffer[40];
  const auto params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Matrix& m = *params[p];
    out << ToyModel::kParameterNames[p] << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        // 17 digits so a reload reproduces the parameters exactly.
        std::snprintf(buffer, sizeof(buffer), "%.17g", m(r, c));
        if (c) out << ' ';
        out << buffer;
      }
      out << '\n';
    }
  }
}

ToyModel ReadCheckpoint(std::istream& in) {
  auto fail = [](const std::string& what) -> ToyModel {
    throw Error(ErrorCode::kParseError, "checkpoint: " + what);
  };
  std::string magic, version;
  ToyModel model;
  int max_target = 0;
  if (!(in >> magic >> version >> model.vocab_per_language >> model.d_model >> max_target) ||
      magic != "toy-model" || version != "v1") {
    return fail("bad header");
  }
  if (model.vocab_per_language < 1 || model.d_model < 1 || max_target < 1) {
    return fail("bad header values");
  }
  const auto params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) return fail("truncated before parameter " + std::to_string(p));
    if (name != ToyModel::kParameterNames[p]) {
      return fail("expected '" + std::string(ToyModel::kParameterNames[p]) + "', got '" + name + "'");
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) {
      if (!(in >> v)) return fail("truncated values in " + name);
    }
    *params[p] = Matrix(rows, cols, std::move(values));
  }
  const std::size_t vocab = 2 * static_cast<std::size_t>(model.vocab_per_language) + 2;
  const std::size_t d = static_cast<std::size_t>(model.d_model);
  if (model.token_embeddings.rows() != vocab || model.token_embeddings.cols() != d ||
      model.source_positions.cols() != d || model.position_queries.cols() != d ||
      model.position_queries.rows() != static_cast<std::size_t>(max_target) ||
      model.output_projection.rows() != d || model.output_projection.cols() != vocab) {
    return fail("parameter shapes disagree with the header");
  }
  return model;
}

}  // namespace sinkdist
