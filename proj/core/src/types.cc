#include "mrcner/types.h"

#include <stdexcept>

namespace mrcner {

TokenSequence TokenSequence::from_tokens(std::vector<std::string> toks) {
  TokenSequence seq;
  seq.char_offsets.reserve(toks.size());
  int pos = 0;
  for (const auto& tok : toks) {
    int begin = pos;
    pos += static_cast<int>(tok.size());
    seq.char_offsets.emplace_back(begin, pos);
    ++pos;  // single separating space
  }
  seq.tokens = std::move(toks);
  seq.validate();
  return seq;
}

void TokenSequence::validate() const {
  if (tokens.empty()) {
    throw std::invalid_argument("TokenSequence must hold at least one token");
  }
  if (tokens.size() != char_offsets.size()) {
    throw std::invalid_argument("token/offset count mismatch");
  }
  int prev_end = -1;
  for (const auto& [begin, end] : char_offsets) {
    if (begin < 0 || end <= begin) {
      throw std::invalid_argument("empty or negative character offset");
    }
    if (begin <= prev_end) {
      throw std::invalid_argument("character offsets overlap or decrease");
    }
    prev_end = end - 1;
  }
}

QueryStyle parse_query_style(const std::string& name) {
  if (name == "index") return QueryStyle::index;
  if (name == "pseudo") return QueryStyle::pseudo;
  if (name == "natural") return QueryStyle::natural;
  throw std::invalid_argument("unknown query style '" + name + "'");
}

const char* to_string(QueryStyle style) {
  switch (style) {
    case QueryStyle::index: return "index";
    case QueryStyle::pseudo: return "pseudo";
    case QueryStyle::natural: return "natural";
  }
  return "natural";
}

std::pair<int, int> to_paper_indices(const SpanAnnotation& span) {
  return {span.start + 1, span.end + 1};
}

SpanAnnotation from_paper_indices(int start_1based, int end_1based, int type_id) {
  return SpanAnnotation{start_1based - 1, end_1based - 1, type_id};
}

}  // namespace mrcner
