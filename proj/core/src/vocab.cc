#include "mrcner/vocab.h"

#include <algorithm>
#include <set>

#include "mrcner/errors.h"

namespace mrcner {

namespace {
const char* kReservedNames[] = {"[PAD]", "[CLS]", "[SEP]", "[UNK]"};
}

Vocabulary Vocabulary::build(const std::vector<Document>& corpus,
                             const QueryTemplateSet& templates,
                             TokenizerMode mode) {
  std::set<std::string> seen;
  for (const auto& doc : corpus) {
    seen.insert(doc.sequence.tokens.begin(), doc.sequence.tokens.end());
  }
  for (const auto& type_name : templates.type_names()) {
    for (QueryStyle style :
         {QueryStyle::index, QueryStyle::pseudo, QueryStyle::natural}) {
      TokenSequence q = tokenize(templates.query(type_name, style), mode);
      seen.insert(q.tokens.begin(), q.tokens.end());
    }
  }
  std::vector<std::string> tokens(std::begin(kReservedNames), std::end(kReservedNames));
  tokens.insert(tokens.end(), seen.begin(), seen.end());  // set is sorted
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  if (tokens.size() < kReserved) {
    throw SchemaMismatch("vocabulary is missing reserved tokens");
  }
  for (int i = 0; i < kReserved; ++i) {
    if (tokens[static_cast<size_t>(i)] != kReservedNames[i]) {
      throw SchemaMismatch("vocabulary reserved tokens out of order");
    }
  }
  vocab.tokens_ = std::move(tokens);
  for (int i = 0; i < static_cast<int>(vocab.tokens_.size()); ++i) {
    if (!vocab.ids_.emplace(vocab.tokens_[static_cast<size_t>(i)], i).second) {
      throw SchemaMismatch("duplicate token in vocabulary: " +
                           vocab.tokens_[static_cast<size_t>(i)]);
    }
  }
  return vocab;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::ids(const TokenSequence& seq) const {
  std::vector<int> out;
  out.reserve(seq.tokens.size());
  for (const auto& tok : seq.tokens) out.push_back(id(tok));
  return out;
}

}  // namespace mrcner
