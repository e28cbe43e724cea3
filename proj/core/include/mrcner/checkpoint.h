#ifndef MRCNER_CHECKPOINT_H_
#define MRCNER_CHECKPOINT_H_

#include <string>

#include "mrcner/encoder.h"
#include "mrcner/ingestion.h"
#include "mrcner/vocab.h"

namespace mrcner {

// Inference settings frozen at training time; flags may override later.
struct InferenceDefaults {
  QueryStyle query_style = QueryStyle::natural;
  TokenizerMode tokenizer = TokenizerMode::word;
  double threshold = 0.5;
};

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
  InferenceDefaults defaults;
};

// Binary container: magic, schema version, JSON header (hyperparameters,
// vocabulary, tensor shapes), then raw little-endian doubles. Loading a
// file with a different schema version throws SchemaMismatch.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab, const InferenceDefaults& defaults);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrcner

#endif  // MRCNER_CHECKPOINT_H_
