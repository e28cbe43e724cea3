#include "mrcner/encoder.h"

#include <cmath>

#include "mrcner/errors.h"

namespace mrcner {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Row-wise layer norm; caches xhat and 1/std for the backward pass.
Matrix layer_norm(const Matrix& x, const LayerNormParams& p, Matrix& xhat,
                  Vector& inv_std) {
  const Eigen::Index m = x.rows(), d = x.cols();
  xhat.resize(m, d);
  inv_std.resize(m);
  Matrix out(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double s = 1.0 / std::sqrt(var + kLnEps);
    inv_std(i) = s;
    xhat.row(i) = (x.row(i).array() - mu) * s;
    out.row(i) = xhat.row(i).cwiseProduct(p.gamma.transpose()) + p.beta.transpose();
  }
  return out;
}

// d(loss)/d(x) for layer_norm; accumulates gamma/beta gradients.
Matrix layer_norm_backward(const Matrix& d_out, const Matrix& xhat,
                           const Vector& inv_std, const LayerNormParams& p,
                           LayerNormParams& grads) {
  const Eigen::Index m = d_out.rows(), d = d_out.cols();
  Matrix dx(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    grads.gamma += d_out.row(i).cwiseProduct(xhat.row(i)).transpose();
    grads.beta += d_out.row(i).transpose();
    Eigen::RowVectorXd dxhat = d_out.row(i).cwiseProduct(p.gamma.transpose());
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(i)).mean();
    dx.row(i) =
        (inv_std(i) *
         (dxhat.array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat))
            .matrix();
  }
  return dx;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::RowVectorXd row =
        (scores.row(i).array() - scores.row(i).maxCoeff()).exp();
    out.row(i) = row / row.sum();
  }
  return out;
}

// Inverted dropout: mask entries are 0 or 1/keep, sampled row-major.
Matrix sample_dropout_mask(Eigen::Index rows, Eigen::Index cols,
                           DropoutState& dropout) {
  const double keep = 1.0 - dropout.rate;
  Matrix mask(rows, cols);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      mask(i, j) = uniform(*dropout.rng) < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

Matrix linear(const Matrix& x, const Matrix& w, const Vector& b) {
  return (x * w).rowwise() + b.transpose();
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers < 1 || heads < 1 || d_model < 1 || d_ff < 1 || max_positions < 3) {
    throw ConfigError("encoder dimensions must be positive (max_positions >= 3)");
  }
  if (d_model % heads != 0) {
    throw ConfigError("d_model must be divisible by the head count");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
}

CombinedInput build_input(const TokenSequence& query, const TokenSequence& context,
                          const Vocabulary& vocab, int max_positions) {
  query.validate();
  context.validate();
  const int n_q = query.size();
  const int n = context.size();
  const int m = n_q + n + 3;
  if (m > max_positions) throw SequenceTooLong(m, max_positions);

  CombinedInput input;
  input.token_ids.reserve(static_cast<size_t>(m));
  input.token_ids.push_back(Vocabulary::kCls);
  for (const auto& tok : query.tokens) input.token_ids.push_back(vocab.id(tok));
  input.token_ids.push_back(Vocabulary::kSep);
  for (const auto& tok : context.tokens) input.token_ids.push_back(vocab.id(tok));
  input.token_ids.push_back(Vocabulary::kSep);

  input.segment_ids.assign(static_cast<size_t>(m), 1);
  for (int i = 0; i <= n_q + 1; ++i) input.segment_ids[static_cast<size_t>(i)] = 0;
  input.context_offset = n_q + 2;
  input.context_len = n;
  return input;
}

SpanStrategy parse_span_strategy(const std::string& name) {
  if (name == "per_token") return SpanStrategy::per_token;
  if (name == "position_classifier") return SpanStrategy::position_classifier;
  throw ConfigError("unknown span strategy '" + name + "'");
}

const char* to_string(SpanStrategy strategy) {
  return strategy == SpanStrategy::per_token ? "per_token" : "position_classifier";
}

ModelParams init_params(const EncoderConfig& config, SpanStrategy strategy,
                        int vocab_size, std::mt19937_64& rng) {
  config.validate();
  if (vocab_size < Vocabulary::kReserved) {
    throw ConfigError("vocabulary too small");
  }
  const int d = config.d_model;
  std::normal_distribution<double> normal(0.0, 0.02);
  auto fill = [&](Matrix& mat, Eigen::Index rows, Eigen::Index cols) {
    mat.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = normal(rng);
  };
  auto fill_vec = [&](Vector& v, Eigen::Index size) {
    v.resize(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = normal(rng);
  };

  ModelParams params;
  params.config = config;
  fill(params.tok_emb, vocab_size, d);
  fill(params.pos_emb, config.max_positions, d);
  fill(params.seg_emb, 2, d);
  params.layers.resize(static_cast<size_t>(config.layers));
  for (auto& layer : params.layers) {
    layer.ln_attn.gamma = Vector::Ones(d);
    layer.ln_attn.beta = Vector::Zero(d);
    layer.ln_ffn.gamma = Vector::Ones(d);
    layer.ln_ffn.beta = Vector::Zero(d);
    fill(layer.attn.wq, d, d);
    fill(layer.attn.wk, d, d);
    fill(layer.attn.wv, d, d);
    fill(layer.attn.wo, d, d);
    layer.attn.bq = Vector::Zero(d);
    layer.attn.bk = Vector::Zero(d);
    layer.attn.bv = Vector::Zero(d);
    layer.attn.bo = Vector::Zero(d);
    fill(layer.ffn.w1, d, config.d_ff);
    layer.ffn.b1 = Vector::Zero(config.d_ff);
    fill(layer.ffn.w2, config.d_ff, d);
    layer.ffn.b2 = Vector::Zero(d);
  }
  params.ln_final.gamma = Vector::Ones(d);
  params.ln_final.beta = Vector::Zero(d);
  params.head.strategy = strategy;
  fill_vec(params.head.w_start, d);
  fill_vec(params.head.w_end, d);
  params.head.b_start = 0.0;
  params.head.b_end = 0.0;
  return params;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (auto& ref : tensor_refs(z)) {
    Eigen::Map<Vector>(ref.data, ref.size()).setZero();
  }
  return z;
}

std::vector<TensorRef> tensor_refs(ModelParams& params) {
  std::vector<TensorRef> refs;
  auto add_mat = [&](const std::string& name, Matrix& mat) {
    refs.push_back({name, mat.data(), mat.rows(), mat.cols()});
  };
  auto add_vec = [&](const std::string& name, Vector& v) {
    refs.push_back({name, v.data(), v.size(), 1});
  };
  add_mat("tok_emb", params.tok_emb);
  add_mat("pos_emb", params.pos_emb);
  add_mat("seg_emb", params.seg_emb);
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    auto& layer = params.layers[l];
    add_vec(p + "ln_attn.gamma", layer.ln_attn.gamma);
    add_vec(p + "ln_attn.beta", layer.ln_attn.beta);
    add_mat(p + "attn.wq", layer.attn.wq);
    add_vec(p + "attn.bq", layer.attn.bq);
    add_mat(p + "attn.wk", layer.attn.wk);
    add_vec(p + "attn.bk", layer.attn.bk);
    add_mat(p + "attn.wv", layer.attn.wv);
    add_vec(p + "attn.bv", layer.attn.bv);
    add_mat(p + "attn.wo", layer.attn.wo);
    add_vec(p + "attn.bo", layer.attn.bo);
    add_vec(p + "ln_ffn.gamma", layer.ln_ffn.gamma);
    add_vec(p + "ln_ffn.beta", layer.ln_ffn.beta);
    add_mat(p + "ffn.w1", layer.ffn.w1);
    add_vec(p + "ffn.b1", layer.ffn.b1);
    add_mat(p + "ffn.w2", layer.ffn.w2);
    add_vec(p + "ffn.b2", layer.ffn.b2);
  }
  add_vec("ln_final.gamma", params.ln_final.gamma);
  add_vec("ln_final.beta", params.ln_final.beta);
  add_vec("head.w_start", params.head.w_start);
  add_vec("head.w_end", params.head.w_end);
  refs.push_back({"head.b_start", &params.head.b_start, 1, 1});
  refs.push_back({"head.b_end", &params.head.b_end, 1, 1});
  return refs;
}

bool all_finite(const ModelParams& params) {
  auto& mutable_params = const_cast<ModelParams&>(params);
  for (const auto& ref : tensor_refs(mutable_params)) {
    if (!Eigen::Map<Vector>(ref.data, ref.size()).allFinite()) return false;
  }
  return true;
}

Matrix encode_forward(const ModelParams& params, const CombinedInput& input,
                      DropoutState dropout, EncodeTrace& trace) {
  const EncoderConfig& cfg = params.config;
  const int m = input.size();
  const int d = cfg.d_model;
  const int heads = cfg.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (m > cfg.max_positions) throw SequenceTooLong(m, cfg.max_positions);

  trace.input = input;
  trace.layers.assign(static_cast<size_t>(cfg.layers), LayerTrace{});

  Matrix x(m, d);
  for (int i = 0; i < m; ++i) {
    x.row(i) = params.tok_emb.row(input.token_ids[static_cast<size_t>(i)]) +
               params.pos_emb.row(i) +
               params.seg_emb.row(input.segment_ids[static_cast<size_t>(i)]);
  }
  if (dropout.active()) {
    trace.emb_drop_mask = sample_dropout_mask(m, d, dropout);
    x = x.cwiseProduct(trace.emb_drop_mask);
  } else {
    trace.emb_drop_mask.resize(0, 0);
  }
  trace.h0 = x;

  for (int l = 0; l < cfg.layers; ++l) {
    LayerTrace& lt = trace.layers[static_cast<size_t>(l)];
    const EncoderLayerParams& lp = params.layers[static_cast<size_t>(l)];
    lt.x_in = x;

    lt.ln_attn_out = layer_norm(x, lp.ln_attn, lt.ln_attn_xhat, lt.ln_attn_inv_std);
    lt.q = linear(lt.ln_attn_out, lp.attn.wq, lp.attn.bq);
    lt.k = linear(lt.ln_attn_out, lp.attn.wk, lp.attn.bk);
    lt.v = linear(lt.ln_attn_out, lp.attn.wv, lp.attn.bv);

    lt.attn.resize(static_cast<size_t>(heads));
    lt.ctx.resize(m, d);
    for (int h = 0; h < heads; ++h) {
      auto qh = lt.q.middleCols(h * dh, dh);
      auto kh = lt.k.middleCols(h * dh, dh);
      auto vh = lt.v.middleCols(h * dh, dh);
      Matrix scores = qh * kh.transpose() * scale;
      lt.attn[static_cast<size_t>(h)] = softmax_rows(scores);
      lt.ctx.middleCols(h * dh, dh) = lt.attn[static_cast<size_t>(h)] * vh;
    }
    Matrix attn_out = linear(lt.ctx, lp.attn.wo, lp.attn.bo);
    if (dropout.active()) {
      lt.attn_drop_mask = sample_dropout_mask(m, d, dropout);
      attn_out = attn_out.cwiseProduct(lt.attn_drop_mask);
    }
    x += attn_out;
    lt.x_mid = x;

    lt.ln_ffn_out = layer_norm(x, lp.ln_ffn, lt.ln_ffn_xhat, lt.ln_ffn_inv_std);
    lt.ffn_pre = linear(lt.ln_ffn_out, lp.ffn.w1, lp.ffn.b1);
    lt.ffn_act = lt.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix ffn_out = linear(lt.ffn_act, lp.ffn.w2, lp.ffn.b2);
    if (dropout.active()) {
      lt.ffn_drop_mask = sample_dropout_mask(m, d, dropout);
      ffn_out = ffn_out.cwiseProduct(lt.ffn_drop_mask);
    }
    x += ffn_out;
  }

  trace.hidden = layer_norm(x, params.ln_final, trace.ln_final_xhat,
                            trace.ln_final_inv_std);
  return trace.hidden;
}

Matrix encode(const ModelParams& params, const CombinedInput& input) {
  EncodeTrace trace;
  return encode_forward(params, input, DropoutState{}, trace);
}

void encode_backward(const ModelParams& params, const EncodeTrace& trace,
                     const Matrix& d_hidden, ModelParams& grads) {
  const EncoderConfig& cfg = params.config;
  const int m = trace.input.size();
  const int d = cfg.d_model;
  const int heads = cfg.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = layer_norm_backward(d_hidden, trace.ln_final_xhat,
                                  trace.ln_final_inv_std, params.ln_final,
                                  grads.ln_final);

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerTrace& lt = trace.layers[static_cast<size_t>(l)];
    const EncoderLayerParams& lp = params.layers[static_cast<size_t>(l)];
    EncoderLayerParams& lg = grads.layers[static_cast<size_t>(l)];

    // x_out = x_mid + drop(ffn(ln(x_mid)))
    Matrix d_ffn_out =
        lt.ffn_drop_mask.size() ? dx.cwiseProduct(lt.ffn_drop_mask).eval() : dx;
    lg.ffn.b2 += d_ffn_out.colwise().sum().transpose();
    lg.ffn.w2 += lt.ffn_act.transpose() * d_ffn_out;
    Matrix d_act = d_ffn_out * lp.ffn.w2.transpose();
    Matrix d_pre = d_act.cwiseProduct(
        lt.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    lg.ffn.b1 += d_pre.colwise().sum().transpose();
    lg.ffn.w1 += lt.ln_ffn_out.transpose() * d_pre;
    Matrix d_ln_ffn = d_pre * lp.ffn.w1.transpose();
    dx += layer_norm_backward(d_ln_ffn, lt.ln_ffn_xhat, lt.ln_ffn_inv_std,
                              lp.ln_ffn, lg.ln_ffn);

    // x_mid = x_in + drop(attn(ln(x_in)))
    Matrix d_attn_out =
        lt.attn_drop_mask.size() ? dx.cwiseProduct(lt.attn_drop_mask).eval() : dx;
    lg.attn.bo += d_attn_out.colwise().sum().transpose();
    lg.attn.wo += lt.ctx.transpose() * d_attn_out;
    Matrix d_ctx = d_attn_out * lp.attn.wo.transpose();

    Matrix dq(m, d), dk(m, d), dv(m, d);
    for (int h = 0; h < heads; ++h) {
      const Matrix& attn = lt.attn[static_cast<size_t>(h)];
      auto kh = lt.k.middleCols(h * dh, dh);
      auto qh = lt.q.middleCols(h * dh, dh);
      auto vh = lt.v.middleCols(h * dh, dh);
      Matrix d_ch = d_ctx.middleCols(h * dh, dh);
      Matrix d_attn = d_ch * vh.transpose();
      dv.middleCols(h * dh, dh) = attn.transpose() * d_ch;
      // softmax backward, row-wise
      Matrix d_scores(m, m);
      for (int i = 0; i < m; ++i) {
        const double dot = d_attn.row(i).dot(attn.row(i));
        d_scores.row(i) =
            (attn.row(i).array() * (d_attn.row(i).array() - dot)).matrix();
      }
      dq.middleCols(h * dh, dh) = d_scores * kh * scale;
      dk.middleCols(h * dh, dh) = d_scores.transpose() * qh * scale;
    }

    lg.attn.bq += dq.colwise().sum().transpose();
    lg.attn.bk += dk.colwise().sum().transpose();
    lg.attn.bv += dv.colwise().sum().transpose();
    lg.attn.wq += lt.ln_attn_out.transpose() * dq;
    lg.attn.wk += lt.ln_attn_out.transpose() * dk;
    lg.attn.wv += lt.ln_attn_out.transpose() * dv;
    Matrix d_ln_attn = dq * lp.attn.wq.transpose() + dk * lp.attn.wk.transpose() +
                       dv * lp.attn.wv.transpose();
    dx += layer_norm_backward(d_ln_attn, lt.ln_attn_xhat, lt.ln_attn_inv_std,
                              lp.ln_attn, lg.ln_attn);
  }

  Matrix d_emb =
      trace.emb_drop_mask.size() ? dx.cwiseProduct(trace.emb_drop_mask).eval() : dx;
  for (int i = 0; i < m; ++i) {
    grads.tok_emb.row(trace.input.token_ids[static_cast<size_t>(i)]) += d_emb.row(i);
    grads.pos_emb.row(i) += d_emb.row(i);
    grads.seg_emb.row(trace.input.segment_ids[static_cast<size_t>(i)]) += d_emb.row(i);
  }
}

}  // namespace mrcner
