#include "mrcner/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "mrcner/errors.h"
#include "mrcner/optimizer.h"

namespace mrcner {

void DecodeConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("decode threshold must lie in (0, 1)");
  }
}

std::optional<std::pair<int, int>> decode_span(const PredictionOutput& pred,
                                               const DecodeConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(pred.p_start.size());
  int start = -1, end = -1;
  if (cfg.strategy == SpanStrategy::per_token) {
    for (int i = 0; i < n; ++i) {
      if (pred.p_start[static_cast<size_t>(i)] > cfg.threshold) {
        start = i;  // smallest index
        break;
      }
    }
    for (int i = n - 1; i >= 0; --i) {
      if (pred.p_end[static_cast<size_t>(i)] > cfg.threshold) {
        end = i;  // largest index
        break;
      }
    }
    if (start < 0 || end < 0) return std::nullopt;
  } else {
    start = static_cast<int>(std::max_element(pred.p_start.begin(), pred.p_start.end()) -
                             pred.p_start.begin());
    end = static_cast<int>(std::max_element(pred.p_end.begin(), pred.p_end.end()) -
                           pred.p_end.begin());
  }
  if (start > end) return std::nullopt;
  return std::make_pair(start, end);
}

std::vector<PredictedSpan> run_algorithm1(const Document& doc,
                                          const ModelParams& params,
                                          const Vocabulary& vocab,
                                          const QueryTemplateSet& templates,
                                          const LabelSet& labels,
                                          QueryStyle style, TokenizerMode mode,
                                          const DecodeConfig& decode) {
  std::vector<PredictedSpan> spans;
  for (int type_id = 0; type_id < labels.size(); ++type_id) {
    TokenSequence query =
        tokenize(templates.query(labels.name(type_id), style), mode);
    CombinedInput input =
        build_input(query, doc.sequence, vocab, params.config.max_positions);
    Matrix hidden = encode(params, input);
    PredictionOutput pred =
        predict(params.head, hidden, input.context_offset, input.context_len);
    auto span = decode_span(pred, decode);
    if (!span) continue;
    spans.push_back(PredictedSpan{
        SpanAnnotation{span->first, span->second, type_id},
        pred.p_start[static_cast<size_t>(span->first)],
        pred.p_end[static_cast<size_t>(span->second)]});
  }
  return spans;
}

EvalReport evaluate(const SpansByDoc& predicted, const SpansByDoc& gold,
                    const LabelSet& labels) {
  if (predicted.size() != gold.size()) {
    throw DocIdMismatch("predicted and gold corpora differ in document count (" +
                        std::to_string(predicted.size()) + " vs " +
                        std::to_string(gold.size()) + ")");
  }
  EvalReport report;
  for (int t = 0; t < labels.size(); ++t) report.per_type[labels.name(t)];

  auto g_it = gold.begin();
  for (auto p_it = predicted.begin(); p_it != predicted.end(); ++p_it, ++g_it) {
    if (p_it->first != g_it->first) {
      throw DocIdMismatch("doc id '" + p_it->first + "' has no gold counterpart");
    }
    std::set<SpanAnnotation> gold_set(g_it->second.begin(), g_it->second.end());
    for (const auto& span : p_it->second) {
      TypeMetrics& tm = report.per_type.at(labels.name(span.type_id));
      ++report.predicted;
      ++tm.predicted;
      if (gold_set.count(span)) {
        ++report.tp;
        ++tm.tp;
      }
    }
    for (const auto& span : g_it->second) {
      ++report.gold;
      ++report.per_type.at(labels.name(span.type_id)).gold;
    }
  }

  auto finish = [](long tp, long predicted_n, long gold_n, double& p, double& r,
                   double& f) {
    p = predicted_n > 0 ? static_cast<double>(tp) / static_cast<double>(predicted_n) : 0.0;
    r = gold_n > 0 ? static_cast<double>(tp) / static_cast<double>(gold_n) : 0.0;
    f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  };
  finish(report.tp, report.predicted, report.gold, report.precision,
         report.recall, report.f1);
  for (auto& [name, tm] : report.per_type) {
    finish(tm.tp, tm.predicted, tm.gold, tm.precision, tm.recall, tm.f1);
  }
  return report;
}

SpansByDoc predict_corpus(const std::vector<Document>& docs,
                          const ModelParams& params, const Vocabulary& vocab,
                          const QueryTemplateSet& templates, const LabelSet& labels,
                          QueryStyle style, TokenizerMode mode,
                          const DecodeConfig& decode) {
  SpansByDoc result;
  for (const auto& doc : docs) {
    auto& spans = result[doc.doc_id];
    for (const auto& ps :
         run_algorithm1(doc, params, vocab, templates, labels, style, mode, decode)) {
      spans.push_back(ps.span);
    }
  }
  return result;
}

SpansByDoc gold_spans_by_doc(const std::vector<Document>& docs) {
  SpansByDoc result;
  for (const auto& doc : docs) result[doc.doc_id] = doc.gold_spans;
  return result;
}

namespace {

// Deterministic in-place shuffle; avoids stdlib-specific std::shuffle.
template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

TrainResult train(const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs,
                  const QueryTemplateSet& templates, const LabelSet& labels,
                  const TrainConfig& cfg) {
  if (train_docs.empty()) throw DataError("empty training split");
  if (dev_docs.empty()) throw DataError("empty dev split");
  cfg.encoder.validate();
  cfg.decode.validate();
  if (cfg.batch_size < 1 || cfg.epochs < 1) {
    throw ConfigError("batch_size and epochs must be positive");
  }

  Vocabulary vocab = Vocabulary::build(train_docs, templates, cfg.tokenizer);

  std::vector<MrcInstance> instances;
  for (const auto& doc : train_docs) {
    auto doc_instances =
        build_instances(doc, templates, labels, cfg.query_style, cfg.tokenizer);
    std::move(doc_instances.begin(), doc_instances.end(),
              std::back_inserter(instances));
  }

  std::mt19937_64 init_rng(cfg.seed);
  std::mt19937_64 train_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  ModelParams params = init_params(cfg.encoder, cfg.strategy, vocab.size(), init_rng);
  ModelParams grads = zeros_like(params);
  auto optimizer = make_optimizer(cfg.optimizer, cfg.lr, cfg.beta1, cfg.beta2,
                                  cfg.adam_eps);

  DecodeConfig decode = cfg.decode;
  decode.strategy = cfg.strategy;
  SpansByDoc dev_gold = gold_spans_by_doc(dev_docs);

  TrainResult result;
  result.best_f1 = -1.0;
  std::vector<size_t> order(instances.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    fisher_yates(order, train_rng);
    double epoch_loss = 0.0;
    const size_t total = order.size();
    int batch_id = 0;
    for (size_t begin = 0; begin < total; begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t batch_end = std::min(total, begin + static_cast<size_t>(cfg.batch_size));
      const double batch_n = static_cast<double>(batch_end - begin);
      for (auto& ref : tensor_refs(grads)) {
        Eigen::Map<Vector>(ref.data, ref.size()).setZero();
      }
      double batch_loss = 0.0;
      for (size_t idx = begin; idx < batch_end; ++idx) {
        const MrcInstance& inst = instances[order[idx]];
        CombinedInput input =
            build_input(inst.query, inst.context, vocab, cfg.encoder.max_positions);
        EncodeTrace trace;
        DropoutState dropout{&train_rng, cfg.encoder.dropout};
        Matrix hidden = encode_forward(params, input, dropout, trace);
        Matrix d_hidden;
        batch_loss += instance_backward(params.head, hidden, input, inst, cfg.loss,
                                        d_hidden, grads.head);
        encode_backward(params, trace, d_hidden, grads);
      }
      if (!std::isfinite(batch_loss)) throw NonFiniteLoss(epoch, batch_id);
      for (auto& ref : tensor_refs(grads)) {
        Eigen::Map<Vector>(ref.data, ref.size()) /= batch_n;
      }
      optimizer->step(params, grads);
      epoch_loss += batch_loss;
      ++batch_id;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = epoch_loss / static_cast<double>(total);
    em.dev = evaluate(predict_corpus(dev_docs, params, vocab, templates, labels,
                                     cfg.query_style, cfg.tokenizer, decode),
                      dev_gold, labels);
    if (em.dev.f1 > result.best_f1) {
      result.best_f1 = em.dev.f1;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    result.history.push_back(std::move(em));
  }
  result.vocab = std::move(vocab);
  return result;
}

std::vector<Document> subsample(const std::vector<Document>& docs,
                                double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("fraction must lie in (0, 1]");
  }
  const size_t keep = std::min(
      docs.size(),
      static_cast<size_t>(std::ceil(fraction * static_cast<double>(docs.size()))));
  std::vector<size_t> order(docs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  fisher_yates(order, rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());  // preserve corpus order
  std::vector<Document> out;
  out.reserve(keep);
  for (size_t i : order) out.push_back(docs[i]);
  return out;
}

namespace {

AblationRow run_condition(const std::string& condition,
                          const std::vector<Document>& train_docs,
                          const std::vector<Document>& dev_docs,
                          const std::vector<Document>& test_docs,
                          const QueryTemplateSet& templates, const LabelSet& labels,
                          const TrainConfig& cfg) {
  AblationRow row;
  row.condition = condition;
  row.result = train(train_docs, dev_docs, templates, labels, cfg);
  row.best_epoch = row.result.best_epoch;
  row.dev_f1 = row.result.best_f1;
  DecodeConfig decode = cfg.decode;
  decode.strategy = cfg.strategy;
  row.test = evaluate(
      predict_corpus(test_docs, row.result.best_params, row.result.vocab, templates,
                     labels, cfg.query_style, cfg.tokenizer, decode),
      gold_spans_by_doc(test_docs), labels);
  return row;
}

}  // namespace

std::vector<AblationRow> ablate_query_style(
    const std::vector<Document>& train_docs, const std::vector<Document>& dev_docs,
    const std::vector<Document>& test_docs, const QueryTemplateSet& templates,
    const LabelSet& labels, const TrainConfig& cfg) {
  std::vector<AblationRow> rows;
  for (QueryStyle style :
       {QueryStyle::index, QueryStyle::pseudo, QueryStyle::natural}) {
    TrainConfig c = cfg;
    c.query_style = style;
    rows.push_back(run_condition(to_string(style), train_docs, dev_docs, test_docs,
                                 templates, labels, c));
  }
  return rows;
}

std::vector<AblationRow> ablate_loss(
    const std::vector<Document>& train_docs, const std::vector<Document>& dev_docs,
    const std::vector<Document>& test_docs, const QueryTemplateSet& templates,
    const LabelSet& labels, const TrainConfig& cfg) {
  std::vector<AblationRow> rows;
  for (LossConfig::Kind kind :
       {LossConfig::Kind::dice, LossConfig::Kind::cross_entropy}) {
    TrainConfig c = cfg;
    c.loss.kind = kind;
    rows.push_back(run_condition(to_string(kind), train_docs, dev_docs, test_docs,
                                 templates, labels, c));
  }
  return rows;
}

std::vector<AblationRow> ablate_data_fraction(
    const std::vector<Document>& train_docs, const std::vector<Document>& dev_docs,
    const std::vector<Document>& test_docs, const QueryTemplateSet& templates,
    const LabelSet& labels, const TrainConfig& cfg,
    const std::vector<double>& fractions) {
  std::vector<AblationRow> rows;
  for (double fraction : fractions) {
    auto subset = subsample(train_docs, fraction, cfg.seed);
    char label[32];
    std::snprintf(label, sizeof(label), "%.4g", fraction);
    rows.push_back(run_condition(label, subset, dev_docs, test_docs, templates,
                                 labels, cfg));
  }
  return rows;
}

}  // namespace mrcner
