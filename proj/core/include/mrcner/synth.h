#ifndef MRCNER_SYNTH_H_
#define MRCNER_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mrcner/ingestion.h"

namespace mrcner {

// Seeded generator of nested-format corpora over three entity types
// (PER, ORG, LOC). Sentences hold at most one span per type; a nested
// pair is a PER strictly inside an ORG. `imbalance` in [0, 1] stretches
// the filler span of each sentence, driving the positive-token rate down.
struct SynthConfig {
  int train_size = 500;
  int dev_size = 0;   // 0 -> max(1, train_size / 5)
  int test_size = 0;  // 0 -> max(1, train_size / 5)
  double nesting_rate = 0.5;
  double imbalance = 0.0;
  double cue_rate = 0.5;  // chance of a type cue word right before a span
  uint64_t seed = 1;

  void validate() const;
};

struct SynthCorpus {
  std::vector<Document> train, dev, test;
  QueryTemplateSet templates;
  LabelSet labels;
};

SynthCorpus generate_corpus(const SynthConfig& config);

// Writes train.jsonl, dev.jsonl, test.jsonl and templates.jsonl.
// Regeneration with the same config is byte-identical.
void write_corpus(const std::string& out_dir, const SynthCorpus& corpus);

}  // namespace mrcner

#endif  // MRCNER_SYNTH_H_
