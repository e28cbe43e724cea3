#ifndef MRCNER_PIPELINE_H_
#define MRCNER_PIPELINE_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrcner/checkpoint.h"
#include "mrcner/encoder.h"
#include "mrcner/ingestion.h"
#include "mrcner/span_model.h"
#include "mrcner/types.h"
#include "mrcner/vocab.h"

namespace mrcner {

// Positive start/end decisions for per_token decoding use `threshold`;
// position_classifier takes the argmax per side.
struct DecodeConfig {
  double threshold = 0.5;
  SpanStrategy strategy = SpanStrategy::per_token;

  void validate() const;  // threshold in (0, 1)
};

// Post-processing of one query's prediction: smallest start candidate,
// largest end candidate; NULL when either side is empty or start > end.
std::optional<std::pair<int, int>> decode_span(const PredictionOutput& pred,
                                               const DecodeConfig& cfg);

struct PredictedSpan {
  SpanAnnotation span;
  double p_start = 0.0;  // probability at the chosen start
  double p_end = 0.0;    // probability at the chosen end
};

// One query per entity type; non-NULL answers are collected with that
// type. At most one span per type; spans of different types may overlap.
std::vector<PredictedSpan> run_algorithm1(const Document& doc,
                                          const ModelParams& params,
                                          const Vocabulary& vocab,
                                          const QueryTemplateSet& templates,
                                          const LabelSet& labels,
                                          QueryStyle style, TokenizerMode mode,
                                          const DecodeConfig& decode);

struct TypeMetrics {
  long tp = 0, predicted = 0, gold = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  long tp = 0, predicted = 0, gold = 0;
  std::map<std::string, TypeMetrics> per_type;
};

using SpansByDoc = std::map<std::string, std::vector<SpanAnnotation>>;

// Exact-match micro P/R/F over (start, end, type) triples. Both maps must
// cover the same doc ids; zero predictions score P = 0 by convention.
EvalReport evaluate(const SpansByDoc& predicted, const SpansByDoc& gold,
                    const LabelSet& labels);

struct TrainConfig {
  EncoderConfig encoder;
  SpanStrategy strategy = SpanStrategy::per_token;
  QueryStyle query_style = QueryStyle::natural;
  TokenizerMode tokenizer = TokenizerMode::word;
  LossConfig loss;
  DecodeConfig decode;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 30;
  uint64_t seed = 1;
};

struct EpochMetrics {
  int epoch = 0;             // 1-based
  double train_loss = 0.0;   // mean instance loss over the epoch
  EvalReport dev;
};

struct TrainResult {
  ModelParams best_params;
  Vocabulary vocab;
  int best_epoch = 0;
  double best_f1 = 0.0;
  std::vector<EpochMetrics> history;
};

// Mini-batch training; model selection by dev micro F1, ties broken by the
// earlier epoch. Fully reproducible given cfg.seed.
TrainResult train(const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs,
                  const QueryTemplateSet& templates, const LabelSet& labels,
                  const TrainConfig& cfg);

// Convenience: decode a whole corpus with a trained model.
SpansByDoc predict_corpus(const std::vector<Document>& docs,
                          const ModelParams& params, const Vocabulary& vocab,
                          const QueryTemplateSet& templates, const LabelSet& labels,
                          QueryStyle style, TokenizerMode mode,
                          const DecodeConfig& decode);

SpansByDoc gold_spans_by_doc(const std::vector<Document>& docs);

// Seed-shuffled prefix of ceil(fraction * size) documents, returned in
// original corpus order. fraction 1.0 returns the corpus unchanged.
std::vector<Document> subsample(const std::vector<Document>& docs,
                                double fraction, uint64_t seed);

struct AblationRow {
  std::string condition;
  EvalReport test;
  int best_epoch = 0;
  double dev_f1 = 0.0;
  TrainResult result;
};

std::vector<AblationRow> ablate_query_style(
    const std::vector<Document>& train_docs, const std::vector<Document>& dev_docs,
    const std::vector<Document>& test_docs, const QueryTemplateSet& templates,
    const LabelSet& labels, const TrainConfig& cfg);

std::vector<AblationRow> ablate_loss(
    const std::vector<Document>& train_docs, const std::vector<Document>& dev_docs,
    const std::vector<Document>& test_docs, const QueryTemplateSet& templates,
    const LabelSet& labels, const TrainConfig& cfg);

std::vector<AblationRow> ablate_data_fraction(
    const std::vector<Document>& train_docs, const std::vector<Document>& dev_docs,
    const std::vector<Document>& test_docs, const QueryTemplateSet& templates,
    const LabelSet& labels, const TrainConfig& cfg,
    const std::vector<double>& fractions);

}  // namespace mrcner

#endif  // MRCNER_PIPELINE_H_
