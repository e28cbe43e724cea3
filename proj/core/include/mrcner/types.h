#ifndef MRCNER_TYPES_H_
#define MRCNER_TYPES_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mrcner {

// A tokenized sentence with character offsets into its source text.
// Immutable after construction; spans index into `tokens` 0-based.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<std::pair<int, int>> char_offsets;  // [begin, end) per token

  int size() const { return static_cast<int>(tokens.size()); }

  // Sequence whose source text is the tokens joined by single spaces.
  static TokenSequence from_tokens(std::vector<std::string> toks);

  // Enforces: non-empty, offsets aligned with tokens, offsets strictly
  // increasing and non-overlapping. Throws std::invalid_argument.
  void validate() const;
};

enum class QueryStyle { index, pseudo, natural };

QueryStyle parse_query_style(const std::string& name);
const char* to_string(QueryStyle style);

// An entity category bound to the query text used to ask for it.
struct EntityTypeSpec {
  int type_id = 0;
  std::string name;
  std::string query_text;
  QueryStyle query_style = QueryStyle::natural;
};

// A typed, inclusive [start, end] token span. 0-based internally; the
// 1-based convention appears only in serialized reports.
struct SpanAnnotation {
  int start = 0;
  int end = 0;
  int type_id = 0;

  friend auto operator<=>(const SpanAnnotation&, const SpanAnnotation&) = default;
};

// 1-based (start, end) used in serialized output.
std::pair<int, int> to_paper_indices(const SpanAnnotation& span);
SpanAnnotation from_paper_indices(int start_1based, int end_1based, int type_id);

// One (query, context) training/inference unit. g_start/g_end are 0/1
// indicator vectors over context tokens; multiple 1s encode multiple
// same-type mentions.
struct MrcInstance {
  TokenSequence query;
  TokenSequence context;
  std::vector<double> g_start;
  std::vector<double> g_end;
  int type_id = 0;
};

// Per-token start/end probabilities over the context, each in [0, 1].
struct PredictionOutput {
  std::vector<double> p_start;
  std::vector<double> p_end;
};

}  // namespace mrcner

#endif  // MRCNER_TYPES_H_
