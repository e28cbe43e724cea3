#ifndef MRCNER_TESTS_TEST_UTIL_H_
#define MRCNER_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mrcner/encoder.h"
#include "mrcner/ingestion.h"
#include "mrcner/pipeline.h"
#include "mrcner/span_model.h"
#include "mrcner/synth.h"
#include "mrcner/types.h"
#include "mrcner/vocab.h"

namespace mrcner::test {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

// Loss of one instance under inference-mode encoding.
inline double model_loss(const ModelParams& params, const Vocabulary& vocab,
                         const MrcInstance& inst, const LossConfig& cfg) {
  CombinedInput input =
      build_input(inst.query, inst.context, vocab, params.config.max_positions);
  Matrix hidden = encode(params, input);
  PredictionOutput pred =
      predict(params.head, hidden, input.context_offset, input.context_len);
  return instance_loss(pred, inst, cfg);
}

// Analytic gradient of model_loss for every parameter tensor.
inline ModelParams model_grads(const ModelParams& params, const Vocabulary& vocab,
                               const MrcInstance& inst, const LossConfig& cfg) {
  ModelParams grads = zeros_like(params);
  CombinedInput input =
      build_input(inst.query, inst.context, vocab, params.config.max_positions);
  EncodeTrace trace;
  Matrix hidden = encode_forward(params, input, DropoutState{}, trace);
  Matrix d_hidden;
  instance_backward(params.head, hidden, input, inst, cfg, d_hidden, grads.head);
  encode_backward(params, trace, d_hidden, grads);
  return grads;
}

// Central finite difference of model_loss along one parameter coordinate.
inline double fd_coordinate(ModelParams& params, double* coord,
                            const Vocabulary& vocab, const MrcInstance& inst,
                            const LossConfig& cfg, double step = 1e-5) {
  const double saved = *coord;
  *coord = saved + step;
  const double plus = model_loss(params, vocab, inst, cfg);
  *coord = saved - step;
  const double minus = model_loss(params, vocab, inst, cfg);
  *coord = saved;
  return (plus - minus) / (2.0 * step);
}

// Worst relative error between analytic and finite-difference gradients,
// probing a few coordinates of every tensor.
inline double check_model_gradients(ModelParams& params, const Vocabulary& vocab,
                                    const MrcInstance& inst, const LossConfig& cfg,
                                    std::mt19937_64& rng,
                                    int random_coords_per_tensor = 2) {
  ModelParams grads = model_grads(params, vocab, inst, cfg);
  auto p_refs = tensor_refs(params);
  auto g_refs = tensor_refs(grads);
  double worst = 0.0;
  for (size_t t = 0; t < p_refs.size(); ++t) {
    const Eigen::Index size = p_refs[t].size();
    std::vector<Eigen::Index> coords = {0, size / 2, size - 1};
    for (int r = 0; r < random_coords_per_tensor; ++r) {
      coords.push_back(static_cast<Eigen::Index>(rng() % static_cast<uint64_t>(size)));
    }
    for (Eigen::Index c : coords) {
      const double fd =
          fd_coordinate(params, p_refs[t].data + c, vocab, inst, cfg);
      worst = std::max(worst, rel_err(g_refs[t].data[c], fd));
    }
  }
  return worst;
}

// Small-corpus fixture for model-level tests: tiny encoder, short pseudo
// queries, a handful of synthetic documents.
struct SmallFixture {
  SynthCorpus corpus;
  Vocabulary vocab;
  EncoderConfig config;
  std::vector<MrcInstance> instances;

  explicit SmallFixture(uint64_t seed = 5, int docs = 12,
                        QueryStyle style = QueryStyle::pseudo) {
    SynthConfig sc;
    sc.train_size = docs;
    sc.dev_size = 4;
    sc.test_size = 4;
    sc.nesting_rate = 0.5;
    sc.seed = seed;
    corpus = generate_corpus(sc);
    vocab = Vocabulary::build(corpus.train, corpus.templates, TokenizerMode::word);
    config.layers = 2;
    config.heads = 2;
    config.d_model = 16;
    config.d_ff = 32;
    config.max_positions = 64;
    config.dropout = 0.1;
    for (const auto& doc : corpus.train) {
      auto doc_insts = build_instances(doc, corpus.templates, corpus.labels, style,
                                       TokenizerMode::word);
      std::move(doc_insts.begin(), doc_insts.end(), std::back_inserter(instances));
    }
  }

  ModelParams make_params(SpanStrategy strategy = SpanStrategy::per_token,
                          uint64_t seed = 99) const {
    std::mt19937_64 rng(seed);
    return init_params(config, strategy, vocab.size(), rng);
  }
};

// Random valid BIO text: token<TAB>tag lines, blank line between
// sentences, no dangling I tags.
inline std::string random_bio(std::mt19937_64& rng, int sentences,
                              const std::vector<std::string>& type_names) {
  static const char* kWords[] = {"alpha", "beta", "gamma", "delta", "omega",
                                 "kappa", "sigma", "tau",   "phi",   "rho"};
  std::string out;
  for (int s = 0; s < sentences; ++s) {
    if (s > 0) out += "\n";
    const int n = 1 + static_cast<int>(rng() % 12);
    int i = 0;
    while (i < n) {
      const bool entity = (rng() % 100) < 35;
      if (entity) {
        const auto& type = type_names[rng() % type_names.size()];
        const int len = std::min<int>(n - i, 1 + static_cast<int>(rng() % 3));
        for (int k = 0; k < len; ++k) {
          out += kWords[rng() % 10];
          out += '\t';
          out += (k == 0 ? "B-" : "I-") + type;
          out += '\n';
        }
        i += len;
      } else {
        out += kWords[rng() % 10];
        out += "\tO\n";
        ++i;
      }
    }
  }
  return out;
}

}  // namespace mrcner::test

#endif  // MRCNER_TESTS_TEST_UTIL_H_
