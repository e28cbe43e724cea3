#include "mrcner/synth.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "mrcner/errors.h"

namespace mrcner {

namespace {

const std::vector<std::string> kFillers = {
    "the",    "of",     "said",   "today",  "after",  "market", "report",
    "early",  "while",  "quietly", "again",  "before", "during", "around",
    "new",    "old",    "still",  "about",  "under",  "over",   "in",
    "announced", "meeting", "deal", "plan",  "talks",  "week",   "year"};

const std::vector<std::string> kPerFirst = {"alice",  "bob",   "carol", "david",
                                            "erin",   "frank", "grace", "henry"};
const std::vector<std::string> kPerLast = {"smith",  "jones", "zhang", "brown",
                                           "davis",  "miller", "wilson", "moore"};
const std::vector<std::string> kOrgHead = {"acme",   "globex", "initech",
                                           "umbrella", "hooli", "vandelay"};
const std::vector<std::string> kOrgTail = {"corp",   "inc",   "group",
                                           "foundation", "labs", "holdings"};
const std::vector<std::string> kLocWords = {"paris", "london", "beijing", "cairo",
                                            "oslo",  "lima",   "quito",   "dakar"};

constexpr const char* kTypeNames[] = {"PER", "ORG", "LOC"};
constexpr const char* kCueWords[] = {"person", "company", "location"};
constexpr const char* kIndexQueries[] = {"one", "two", "three"};

struct EntityChunk {
  std::vector<std::string> tokens;
  int type_id;
  int span_off;   // offset of the span start within tokens (skips a cue)
  int span_len;
  int inner_type_id = -1;  // nested span, when present
  int inner_off = 0;
  int inner_len = 0;
};

class SentenceSampler {
 public:
  SentenceSampler(const SynthConfig& config, std::mt19937_64& rng)
      : config_(config), rng_(rng) {}

  Document sample(const std::string& doc_id) {
    const int lo = 6 + static_cast<int>(50.0 * config_.imbalance);
    const int hi = 12 + static_cast<int>(70.0 * config_.imbalance);
    const int fillers = uniform_int(lo, hi);

    std::vector<std::vector<std::string>> chunks;
    chunks.reserve(static_cast<size_t>(fillers) + 3);
    for (int i = 0; i < fillers; ++i) chunks.push_back({pick(kFillers)});

    std::vector<EntityChunk> entities;
    if (coin(config_.nesting_rate)) {
      entities.push_back(make_nested_org());
    } else if (!coin(0.1)) {  // occasional pure-filler sentence
      entities.push_back(coin(0.5) ? make_org() : make_per());
    }
    if (coin(0.5)) entities.push_back(make_loc());

    // Insert each entity as one contiguous chunk at a random gap, then
    // flatten and compute final token positions.
    std::vector<int> chunk_entity(chunks.size(), -1);
    for (size_t e = 0; e < entities.size(); ++e) {
      const size_t gap = static_cast<size_t>(uniform_int(0, static_cast<int>(chunks.size())));
      chunks.insert(chunks.begin() + static_cast<long>(gap), entities[e].tokens);
      chunk_entity.insert(chunk_entity.begin() + static_cast<long>(gap),
                          static_cast<int>(e));
    }

    Document doc;
    doc.doc_id = doc_id;
    std::vector<std::string> tokens;
    for (size_t c = 0; c < chunks.size(); ++c) {
      const int pos = static_cast<int>(tokens.size());
      tokens.insert(tokens.end(), chunks[c].begin(), chunks[c].end());
      if (chunk_entity[c] < 0) continue;
      const EntityChunk& ent = entities[static_cast<size_t>(chunk_entity[c])];
      const int start = pos + ent.span_off;
      doc.gold_spans.push_back(
          SpanAnnotation{start, start + ent.span_len - 1, ent.type_id});
      if (ent.inner_type_id >= 0) {
        const int inner_start = pos + ent.inner_off;
        doc.gold_spans.push_back(SpanAnnotation{
            inner_start, inner_start + ent.inner_len - 1, ent.inner_type_id});
      }
    }
    doc.sequence = TokenSequence::from_tokens(std::move(tokens));
    return doc;
  }

 private:
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng_() % static_cast<uint64_t>(hi - lo + 1));
  }
  bool coin(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
  }
  const std::string& pick(const std::vector<std::string>& words) {
    return words[static_cast<size_t>(uniform_int(0, static_cast<int>(words.size()) - 1))];
  }

  EntityChunk with_cue(EntityChunk chunk) {
    if (coin(config_.cue_rate)) {
      chunk.tokens.insert(chunk.tokens.begin(), kCueWords[chunk.type_id]);
      ++chunk.span_off;
      if (chunk.inner_type_id >= 0) ++chunk.inner_off;
    }
    return chunk;
  }

  EntityChunk make_per() {
    return with_cue({{pick(kPerFirst), pick(kPerLast)}, type_per(), 0, 2});
  }
  EntityChunk make_org() {
    return with_cue({{pick(kOrgHead), pick(kOrgTail)}, type_org(), 0, 2});
  }
  EntityChunk make_loc() {
    return with_cue({{pick(kLocWords)}, type_loc(), 0, 1});
  }
  EntityChunk make_nested_org() {
    EntityChunk chunk{{pick(kOrgHead), pick(kPerFirst), pick(kPerLast), pick(kOrgTail)},
                      type_org(),
                      0,
                      4};
    chunk.inner_type_id = type_per();
    chunk.inner_off = 1;
    chunk.inner_len = 2;
    return with_cue(std::move(chunk));
  }

  static int type_per() { return 0; }
  static int type_org() { return 1; }
  static int type_loc() { return 2; }

  const SynthConfig& config_;
  std::mt19937_64& rng_;
};

}  // namespace

void SynthConfig::validate() const {
  if (train_size < 1) throw ConfigError("synth size must be >= 1");
  if (nesting_rate < 0.0 || nesting_rate > 1.0) {
    throw ConfigError("nesting_rate must lie in [0, 1]");
  }
  if (imbalance < 0.0 || imbalance > 1.0) {
    throw ConfigError("imbalance must lie in [0, 1]");
  }
  if (cue_rate < 0.0 || cue_rate > 1.0) {
    throw ConfigError("cue_rate must lie in [0, 1]");
  }
}

SynthCorpus generate_corpus(const SynthConfig& config) {
  config.validate();
  SynthCorpus corpus;
  for (int t = 0; t < 3; ++t) {
    QueryTemplates q;
    q.index_query = kIndexQueries[t];
    q.pseudo_query = kCueWords[t];
    q.natural_query =
        std::string("which ") + kCueWords[t] + " is mentioned in the text";
    corpus.templates.add(kTypeNames[t], std::move(q));
  }
  corpus.labels = LabelSet(corpus.templates);

  std::mt19937_64 rng(config.seed);
  SentenceSampler sampler(config, rng);
  const int dev_n = config.dev_size > 0 ? config.dev_size
                                        : std::max(1, config.train_size / 5);
  const int test_n = config.test_size > 0 ? config.test_size
                                          : std::max(1, config.train_size / 5);
  for (int i = 0; i < config.train_size; ++i) {
    corpus.train.push_back(sampler.sample("train-" + std::to_string(i)));
  }
  for (int i = 0; i < dev_n; ++i) {
    corpus.dev.push_back(sampler.sample("dev-" + std::to_string(i)));
  }
  for (int i = 0; i < test_n; ++i) {
    corpus.test.push_back(sampler.sample("test-" + std::to_string(i)));
  }
  return corpus;
}

void write_corpus(const std::string& out_dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(out_dir);
  auto write_split = [&](const std::string& name, const std::vector<Document>& docs) {
    const std::string path = out_dir + "/" + name + ".jsonl";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(path);
    write_nested(out, docs, corpus.labels);
  };
  write_split("train", corpus.train);
  write_split("dev", corpus.dev);
  write_split("test", corpus.test);
  corpus.templates.save(out_dir + "/templates.jsonl");
}

}  // namespace mrcner
