#ifndef MRCNER_SERIALIZATION_H_
#define MRCNER_SERIALIZATION_H_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mrcner/ingestion.h"
#include "mrcner/pipeline.h"
#include "mrcner/types.h"

namespace mrcner {

// One line-delimited metrics record. Serialized without any wall-clock
// data so identical runs diff clean.
struct MetricsRecord {
  std::string run_id;
  int epoch = 0;
  std::string split;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::string loss_kind;
  std::string query_style;
  double fraction = 1.0;
  uint64_t seed = 0;
  double train_loss = 0.0;
};

void write_metrics_record(std::ostream& out, const MetricsRecord& record);

// Per-document prediction records {doc_id, spans: [{start, end, type,
// p_start, p_end}]}; indices are 1-based on disk.
void write_predictions(std::ostream& out, const std::string& doc_id,
                       const std::vector<PredictedSpan>& spans,
                       const LabelSet& labels);
SpansByDoc read_predictions(std::istream& in, const LabelSet& labels);

// Fixed-width TSV with a header; one row per ablation condition.
void write_ablation_table(std::ostream& out, const std::string& axis,
                          const std::vector<AblationRow>& rows);

std::string format_eval_report(const EvalReport& report);

}  // namespace mrcner

#endif  // MRCNER_SERIALIZATION_H_
