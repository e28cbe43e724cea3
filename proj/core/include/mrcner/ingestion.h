#ifndef MRCNER_INGESTION_H_
#define MRCNER_INGESTION_H_

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrcner/types.h"

namespace mrcner {

enum class TokenizerMode { word, character };

TokenizerMode parse_tokenizer_mode(const std::string& name);
const char* to_string(TokenizerMode mode);

// word: split on ASCII whitespace. character: one token per UTF-8 code
// point, whitespace skipped. Offsets are byte positions into `text`.
TokenSequence tokenize(const std::string& text, TokenizerMode mode);

// In-memory corpus unit. Gold spans of different types may overlap.
struct Document {
  TokenSequence sequence;
  std::vector<SpanAnnotation> gold_spans;
  std::string doc_id;
};

struct QueryTemplates {
  std::string index_query;
  std::string pseudo_query;
  std::string natural_query;
};

// Per-type query texts in all three styles, keyed by entity type name.
// Entry order defines the label set and its type ids.
class QueryTemplateSet {
 public:
  void add(const std::string& type_name, QueryTemplates templates);

  // Loads line-delimited records {type, index_query, pseudo_query,
  // natural_query}.
  static QueryTemplateSet load(const std::string& path);
  static QueryTemplateSet parse(std::istream& in);

  void save(const std::string& path) const;

  bool has(const std::string& type_name) const;
  // Throws MissingTemplate for an unknown type.
  const std::string& query(const std::string& type_name, QueryStyle style) const;
  const std::vector<std::string>& type_names() const { return order_; }
  size_t size() const { return order_.size(); }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, QueryTemplates> entries_;
};

std::string select_query(const QueryTemplateSet& templates,
                         const std::string& type_name, QueryStyle style);

// The label set Y. Type ids are dense [0, size) in template-file order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);
  explicit LabelSet(const QueryTemplateSet& templates);

  int id(const std::string& name) const;        // throws UnknownType
  bool contains(const std::string& name) const;
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

// BIO corpus: token<TAB>tag lines, blank line between sentences, tags in
// {O, B-T, I-T}. A dangling I-T is repaired to B-T.
std::vector<Document> parse_bio(std::istream& in, const LabelSet& labels);
std::vector<Document> load_bio(const std::string& path, const LabelSet& labels);
std::string emit_bio(const std::vector<Document>& docs, const LabelSet& labels);

// Nested corpus: one JSON record per line with `tokens` (array of strings)
// and `spans` (array of {start, end, type}, 0-based inclusive). `doc_id`
// is optional; missing ids are assigned by position.
std::vector<Document> parse_nested(std::istream& in, const LabelSet& labels);
std::vector<Document> load_nested(const std::string& path, const LabelSet& labels);
void write_nested(std::ostream& out, const std::vector<Document>& docs,
                  const LabelSet& labels);

// One MrcInstance per entity type, in label-set order. Types with no gold
// span get all-zero indicator vectors. The query is tokenized with the
// same tokenizer as the context corpus.
std::vector<MrcInstance> build_instances(const Document& doc,
                                         const QueryTemplateSet& templates,
                                         const LabelSet& labels,
                                         QueryStyle style,
                                         TokenizerMode mode);

}  // namespace mrcner

#endif  // MRCNER_INGESTION_H_
