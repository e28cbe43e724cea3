#ifndef MRCNER_SPAN_MODEL_H_
#define MRCNER_SPAN_MODEL_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrcner/encoder.h"
#include "mrcner/types.h"

namespace mrcner {

struct LossConfig {
  enum class Kind { dice, cross_entropy };
  Kind kind = Kind::dice;
  double lambda = 1.0;  // dice smoothing/trade-off, ignored for cross_entropy
};

LossConfig::Kind parse_loss_kind(const std::string& name);
const char* to_string(LossConfig::Kind kind);

// Start/end probabilities over the context slice of `hidden`.
PredictionOutput predict(const SpanHeadParams& head, const Matrix& hidden,
                         int context_offset, int context_len);

// 1 - (2*sum(p*g) + lambda) / (sum(p^2) + sum(g^2) + lambda).
// Throws DegenerateInput when lambda == 0 and both vectors are all-zero.
double dice_loss(std::span<const double> p, std::span<const double> g,
                 double lambda);

// The two fractional terms of the loss split: the overlap (recall-like)
// term 2*sum(p*g)/D and the smoothing (precision-like) term lambda/D.
// recall + precision + dice_loss == 1 algebraically.
std::pair<double, double> dice_decomposition(std::span<const double> p,
                                             std::span<const double> g,
                                             double lambda);

// d(dice_loss)/d(p_i); requires lambda > 0.
std::vector<double> dice_grad(std::span<const double> p,
                              std::span<const double> g, double lambda);

// Mean binary cross entropy with probabilities clamped at 1e-7.
double cross_entropy_loss(std::span<const double> p, std::span<const double> g);
std::vector<double> cross_entropy_grad(std::span<const double> p,
                                       std::span<const double> g);

// loss(p_start, g_start) + loss(p_end, g_end) per cfg.kind.
double instance_loss(const PredictionOutput& pred, const MrcInstance& inst,
                     const LossConfig& cfg);

// Loss plus gradients: fills d_hidden (same shape as hidden, zero outside
// the context slice) and accumulates span-head gradients into `grads`.
double instance_backward(const SpanHeadParams& head, const Matrix& hidden,
                         const CombinedInput& input, const MrcInstance& inst,
                         const LossConfig& cfg, Matrix& d_hidden,
                         SpanHeadParams& grads);

}  // namespace mrcner

#endif  // MRCNER_SPAN_MODEL_H_
