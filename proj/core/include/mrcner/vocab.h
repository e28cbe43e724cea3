#ifndef MRCNER_VOCAB_H_
#define MRCNER_VOCAB_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "mrcner/ingestion.h"

namespace mrcner {

// Token-to-id map with four reserved entries, then corpus and query tokens
// in lexicographic order. Rebuilding from the same inputs yields identical
// ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  static Vocabulary build(const std::vector<Document>& corpus,
                          const QueryTemplateSet& templates,
                          TokenizerMode mode);

  // Restores a vocabulary from its id-ordered token list (checkpoints).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> ids(const TokenSequence& seq) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace mrcner

#endif  // MRCNER_VOCAB_H_
