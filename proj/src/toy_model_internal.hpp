#pragma once

#include <span>

#include "sinkdist/kd_harness.hpp"

namespace sinkdist::internal {

struct ForwardPass {
  Matrix encoded;    // N x d
  Matrix attention;  // T x N, rows sum to one
  Matrix hidden;     // T x d
};

ForwardPass RunForward(const ToyModel& model, std::span<const int> source, int positions);

// Returns scale * sum_t -log p(target_t) and accumulates its gradient: the
// output-projection part into `grad`, the decoder-state part into
// `hidden_grad`.
double CrossEntropyBackward(const ToyModel& model, const ForwardPass& pass,
                            std::span<const int> targets, double scale, Matrix& hidden_grad,
                            ToyModel& grad);

// Pushes d loss / d hidden through attention and the encoder into `grad`.
void HiddenBackward(const ToyModel& model, const ForwardPass& pass, std::span<const int> source,
                    const Matrix& hidden_grad, ToyModel& grad);

}  // namespace sinkdist::internal
