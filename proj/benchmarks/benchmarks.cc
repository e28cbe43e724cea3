#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "mrcner/encoder.h"
#include "mrcner/ingestion.h"
#include "mrcner/pipeline.h"
#include "mrcner/span_model.h"
#include "mrcner/synth.h"

using namespace mrcner;

namespace {

struct BenchSetup {
  SynthCorpus corpus;
  Vocabulary vocab;
  ModelParams params;
  CombinedInput input;
  MrcInstance instance;

  BenchSetup() : corpus(make_corpus()) {
    vocab = Vocabulary::build(corpus.train, corpus.templates, TokenizerMode::word);
    std::mt19937_64 rng(17);
    params = init_params(EncoderConfig{}, SpanStrategy::per_token, vocab.size(), rng);
    instance = build_instances(corpus.train.front(), corpus.templates, corpus.labels,
                               QueryStyle::natural, TokenizerMode::word)
                   .front();
    input = build_input(instance.query, instance.context, vocab,
                        params.config.max_positions);
  }

  static SynthCorpus make_corpus() {
    SynthConfig sc;
    sc.train_size = 64;
    sc.nesting_rate = 0.5;
    sc.seed = 3;
    return generate_corpus(sc);
  }
};

BenchSetup& setup() {
  static BenchSetup instance;
  return instance;
}

void BM_EncodeForward(benchmark::State& state) {
  auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(s.params, s.input));
  }
}
BENCHMARK(BM_EncodeForward);

void BM_EncodeForwardBackward(benchmark::State& state) {
  auto& s = setup();
  ModelParams grads = zeros_like(s.params);
  LossConfig cfg;
  for (auto _ : state) {
    EncodeTrace trace;
    Matrix hidden = encode_forward(s.params, s.input, DropoutState{}, trace);
    Matrix d_hidden;
    benchmark::DoNotOptimize(instance_backward(s.params.head, hidden, s.input,
                                               s.instance, cfg, d_hidden,
                                               grads.head));
    encode_backward(s.params, trace, d_hidden, grads);
  }
}
BENCHMARK(BM_EncodeForwardBackward);

void BM_DiceLoss(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n), g(n);
  for (size_t i = 0; i < n; ++i) {
    p[i] = u(rng);
    g[i] = u(rng) < 0.1 ? 1.0 : 0.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dice_loss(p, g, 1.0));
    benchmark::DoNotOptimize(dice_grad(p, g, 1.0));
  }
}
BENCHMARK(BM_DiceLoss)->Arg(16)->Arg(64)->Arg(256);

void BM_DecodeSpan(benchmark::State& state) {
  const size_t n = 64;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PredictionOutput pred;
  pred.p_start.resize(n);
  pred.p_end.resize(n);
  for (size_t i = 0; i < n; ++i) {
    pred.p_start[i] = u(rng);
    pred.p_end[i] = u(rng);
  }
  DecodeConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_span(pred, cfg));
  }
}
BENCHMARK(BM_DecodeSpan);

void BM_ParseBio(benchmark::State& state) {
  auto& s = setup();
  std::string text = emit_bio(s.corpus.train, s.corpus.labels);
  LabelSet labels = s.corpus.labels;
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(parse_bio(in, labels));
  }
}
BENCHMARK(BM_ParseBio);

void BM_RunAlgorithm1(benchmark::State& state) {
  auto& s = setup();
  DecodeConfig decode;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_algorithm1(
        s.corpus.train.front(), s.params, s.vocab, s.corpus.templates,
        s.corpus.labels, QueryStyle::natural, TokenizerMode::word, decode));
  }
}
BENCHMARK(BM_RunAlgorithm1);

}  // namespace

BENCHMARK_MAIN();
