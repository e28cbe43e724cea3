#ifndef MRCNER_ENCODER_H_
#define MRCNER_ENCODER_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrcner/types.h"
#include "mrcner/vocab.h"

namespace mrcner {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EncoderConfig {
  int layers = 2;
  int heads = 4;
  int d_model = 64;
  int d_ff = 256;
  int max_positions = 512;
  double dropout = 0.1;

  void validate() const;  // throws ConfigError
};

// [CLS, q_y, SEP, X, SEP] as vocabulary ids. Segment 0 covers CLS, the
// query and the first SEP; segment 1 covers the context and the final SEP.
struct CombinedInput {
  std::vector<int> token_ids;
  std::vector<int> segment_ids;
  int context_offset = 0;  // == query length + 2
  int context_len = 0;

  int size() const { return static_cast<int>(token_ids.size()); }
};

CombinedInput build_input(const TokenSequence& query, const TokenSequence& context,
                          const Vocabulary& vocab, int max_positions);

struct LayerNormParams {
  Vector gamma;
  Vector beta;
};

struct AttentionParams {
  Matrix wq, wk, wv, wo;  // d x d
  Vector bq, bk, bv, bo;  // d
};

struct FeedForwardParams {
  Matrix w1;  // d x d_ff
  Vector b1;  // d_ff
  Matrix w2;  // d_ff x d
  Vector b2;  // d
};

// Pre-layer-norm residual block: x += attn(ln(x)); x += ffn(ln(x)).
struct EncoderLayerParams {
  LayerNormParams ln_attn;
  LayerNormParams ln_ffn;
  AttentionParams attn;
  FeedForwardParams ffn;
};

enum class SpanStrategy { per_token, position_classifier };

SpanStrategy parse_span_strategy(const std::string& name);
const char* to_string(SpanStrategy strategy);

// Start/end scoring projections over context hidden states. per_token
// applies an independent logistic per position; position_classifier
// normalizes each score vector over the context positions.
struct SpanHeadParams {
  SpanStrategy strategy = SpanStrategy::per_token;
  Vector w_start, w_end;  // d
  double b_start = 0.0;
  double b_end = 0.0;
};

// Every trainable tensor of the encoder and the span heads.
struct ModelParams {
  static constexpr uint32_t kSchemaVersion = 1;

  EncoderConfig config;
  Matrix tok_emb;  // vocab x d
  Matrix pos_emb;  // max_positions x d
  Matrix seg_emb;  // 2 x d
  std::vector<EncoderLayerParams> layers;
  LayerNormParams ln_final;
  SpanHeadParams head;
};

ModelParams init_params(const EncoderConfig& config, SpanStrategy strategy,
                        int vocab_size, std::mt19937_64& rng);

// Same tensor shapes as `params`, all entries zero. Used as the gradient
// and optimizer-moment container.
ModelParams zeros_like(const ModelParams& params);

// Named flat view over every tensor, in a fixed order shared by the
// optimizer, the serializer and the gradient checker.
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};
std::vector<TensorRef> tensor_refs(ModelParams& params);

bool all_finite(const ModelParams& params);

// Inverted-dropout source. Masks are drawn from `rng` only when training.
struct DropoutState {
  std::mt19937_64* rng = nullptr;
  double rate = 0.0;
  bool active() const { return rng != nullptr && rate > 0.0; }
};

// Forward intermediates kept for the backward pass.
struct LayerTrace {
  Matrix x_in;                  // m x d, block input
  Matrix ln_attn_xhat;          // m x d
  Vector ln_attn_inv_std;       // m
  Matrix ln_attn_out;           // m x d
  Matrix q, k, v;               // m x d
  std::vector<Matrix> attn;     // per head, m x m softmax rows
  Matrix ctx;                   // m x d, heads concatenated
  Matrix attn_drop_mask;        // m x d, empty when not training
  Matrix x_mid;                 // m x d
  Matrix ln_ffn_xhat;
  Vector ln_ffn_inv_std;
  Matrix ln_ffn_out;
  Matrix ffn_pre;               // m x d_ff
  Matrix ffn_act;               // m x d_ff
  Matrix ffn_drop_mask;         // m x d
};

struct EncodeTrace {
  CombinedInput input;
  Matrix emb_drop_mask;         // m x d, empty when not training
  Matrix h0;                    // m x d, embeddings after dropout
  std::vector<LayerTrace> layers;
  Matrix ln_final_xhat;
  Vector ln_final_inv_std;
  Matrix hidden;                // m x d
};

// Training-mode forward; returns hidden states and fills `trace`.
Matrix encode_forward(const ModelParams& params, const CombinedInput& input,
                      DropoutState dropout, EncodeTrace& trace);

// Inference-mode forward: deterministic, no dropout.
Matrix encode(const ModelParams& params, const CombinedInput& input);

// Accumulates parameter gradients into `grads` given d(loss)/d(hidden).
void encode_backward(const ModelParams& params, const EncodeTrace& trace,
                     const Matrix& d_hidden, ModelParams& grads);

}  // namespace mrcner

#endif  // MRCNER_ENCODER_H_
