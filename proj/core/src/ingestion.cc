#include "mrcner/ingestion.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mrcner/errors.h"

namespace mrcner {

using json = nlohmann::json;

TokenizerMode parse_tokenizer_mode(const std::string& name) {
  if (name == "word") return TokenizerMode::word;
  if (name == "char" || name == "character") return TokenizerMode::character;
  throw ConfigError("unknown tokenizer mode '" + name + "'");
}

const char* to_string(TokenizerMode mode) {
  return mode == TokenizerMode::word ? "word" : "char";
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length in bytes of the UTF-8 sequence starting at `lead`.
int utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // invalid lead byte, consume one
}

}  // namespace

TokenSequence tokenize(const std::string& text, TokenizerMode mode) {
  TokenSequence seq;
  size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    size_t begin = i;
    if (mode == TokenizerMode::word) {
      while (i < text.size() && !is_space(text[i])) ++i;
    } else {
      i += static_cast<size_t>(utf8_len(static_cast<unsigned char>(text[i])));
      i = std::min(i, text.size());
    }
    seq.tokens.push_back(text.substr(begin, i - begin));
    seq.char_offsets.emplace_back(static_cast<int>(begin), static_cast<int>(i));
  }
  if (seq.tokens.empty()) {
    throw std::invalid_argument("cannot tokenize empty or all-space text");
  }
  seq.validate();
  return seq;
}

void QueryTemplateSet::add(const std::string& type_name, QueryTemplates templates) {
  if (templates.index_query.empty() || templates.pseudo_query.empty() ||
      templates.natural_query.empty()) {
    throw DataError("template for '" + type_name + "' has an empty query style");
  }
  if (!entries_.emplace(type_name, std::move(templates)).second) {
    throw DataError("duplicate template entry for '" + type_name + "'");
  }
  order_.push_back(type_name);
}

QueryTemplateSet QueryTemplateSet::parse(std::istream& in) {
  QueryTemplateSet set;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedLine(line_no, std::string("bad template record: ") + e.what());
    }
    if (!rec.contains("type")) throw MalformedLine(line_no, "missing 'type'");
    QueryTemplates t;
    t.index_query = rec.value("index_query", "");
    t.pseudo_query = rec.value("pseudo_query", "");
    t.natural_query = rec.value("natural_query", "");
    set.add(rec["type"].get<std::string>(), std::move(t));
  }
  if (set.size() == 0) throw DataError("template file holds no entries");
  return set;
}

QueryTemplateSet QueryTemplateSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure(path);
  return parse(in);
}

void QueryTemplateSet::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoFailure(path);
  for (const auto& name : order_) {
    const QueryTemplates& t = entries_.at(name);
    json rec;
    rec["type"] = name;
    rec["index_query"] = t.index_query;
    rec["pseudo_query"] = t.pseudo_query;
    rec["natural_query"] = t.natural_query;
    out << rec.dump() << "\n";
  }
}

bool QueryTemplateSet::has(const std::string& type_name) const {
  return entries_.count(type_name) > 0;
}

const std::string& QueryTemplateSet::query(const std::string& type_name,
                                           QueryStyle style) const {
  auto it = entries_.find(type_name);
  if (it == entries_.end()) throw MissingTemplate(type_name);
  switch (style) {
    case QueryStyle::index: return it->second.index_query;
    case QueryStyle::pseudo: return it->second.pseudo_query;
    case QueryStyle::natural: return it->second.natural_query;
  }
  return it->second.natural_query;
}

std::string select_query(const QueryTemplateSet& templates,
                         const std::string& type_name, QueryStyle style) {
  return templates.query(type_name, style);
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (int i = 0; i < static_cast<int>(names_.size()); ++i) {
    if (!ids_.emplace(names_[i], i).second) {
      throw DataError("duplicate entity type '" + names_[i] + "' in label set");
    }
  }
}

LabelSet::LabelSet(const QueryTemplateSet& templates)
    : LabelSet(templates.type_names()) {}

int LabelSet::id(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw UnknownType(name);
  return it->second;
}

bool LabelSet::contains(const std::string& name) const {
  return ids_.count(name) > 0;
}

const std::string& LabelSet::name(int id) const {
  return names_.at(static_cast<size_t>(id));
}

namespace {

void validate_spans(const Document& doc, size_t line_for_errors) {
  const int n = doc.sequence.size();
  std::set<SpanAnnotation> seen;
  for (const auto& span : doc.gold_spans) {
    if (span.start < 0 || span.end < span.start || span.end >= n) {
      throw SpanOutOfRange("doc '" + doc.doc_id + "': span (" +
                           std::to_string(span.start) + "," +
                           std::to_string(span.end) + ") out of range for " +
                           std::to_string(n) + " tokens (line " +
                           std::to_string(line_for_errors) + ")");
    }
    if (!seen.insert(span).second) {
      throw DuplicateSpan("doc '" + doc.doc_id + "': duplicate span (" +
                          std::to_string(span.start) + "," +
                          std::to_string(span.end) + ")");
    }
  }
}

}  // namespace

std::vector<Document> parse_bio(std::istream& in, const LabelSet& labels) {
  std::vector<Document> docs;
  std::vector<std::string> tokens;
  std::vector<SpanAnnotation> spans;
  int open_type = -1;   // type id of the span currently being grown
  int open_start = -1;

  auto close_span = [&](int end_inclusive) {
    if (open_type >= 0) {
      spans.push_back(SpanAnnotation{open_start, end_inclusive, open_type});
      open_type = -1;
    }
  };
  auto flush_sentence = [&]() {
    if (tokens.empty()) return;
    close_span(static_cast<int>(tokens.size()) - 1);
    Document doc;
    doc.sequence = TokenSequence::from_tokens(std::move(tokens));
    doc.gold_spans = std::move(spans);
    doc.doc_id = "doc-" + std::to_string(docs.size());
    docs.push_back(std::move(doc));
    tokens.clear();
    spans.clear();
  };

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush_sentence();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw MalformedLine(line_no, "expected token<TAB>tag, got '" + line + "'");
    }
    std::string token = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    int pos = static_cast<int>(tokens.size());

    if (tag == "O") {
      close_span(pos - 1);
    } else if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
      std::string type_name = tag.substr(2);
      if (!labels.contains(type_name)) throw UnknownType(type_name, line_no);
      int type_id = labels.id(type_name);
      if (tag[0] == 'B' || open_type != type_id) {
        // B- always starts a span; a dangling I- is repaired to B-.
        close_span(pos - 1);
        open_type = type_id;
        open_start = pos;
      }
    } else {
      throw MalformedLine(line_no, "bad tag '" + tag + "'");
    }
    tokens.push_back(std::move(token));
  }
  flush_sentence();
  for (const auto& doc : docs) validate_spans(doc, 0);
  return docs;
}

std::vector<Document> load_bio(const std::string& path, const LabelSet& labels) {
  std::ifstream in(path);
  if (!in) throw IoFailure(path);
  return parse_bio(in, labels);
}

std::string emit_bio(const std::vector<Document>& docs, const LabelSet& labels) {
  std::ostringstream out;
  for (size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    const int n = doc.sequence.size();
    std::vector<std::string> tags(static_cast<size_t>(n), "O");
    // BIO cannot express overlaps; emit in span order (parse order).
    for (const auto& span : doc.gold_spans) {
      tags[static_cast<size_t>(span.start)] = "B-" + labels.name(span.type_id);
      for (int i = span.start + 1; i <= span.end; ++i) {
        tags[static_cast<size_t>(i)] = "I-" + labels.name(span.type_id);
      }
    }
    for (int i = 0; i < n; ++i) {
      out << doc.sequence.tokens[static_cast<size_t>(i)] << '\t'
          << tags[static_cast<size_t>(i)] << '\n';
    }
    if (d + 1 < docs.size()) out << '\n';
  }
  return out.str();
}

std::vector<Document> parse_nested(std::istream& in, const LabelSet& labels) {
  std::vector<Document> docs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedLine(line_no, std::string("bad record: ") + e.what());
    }
    if (!rec.contains("tokens") || !rec["tokens"].is_array() || rec["tokens"].empty()) {
      throw MalformedLine(line_no, "missing or empty 'tokens'");
    }
    Document doc;
    doc.doc_id = rec.value("doc_id", "doc-" + std::to_string(docs.size()));
    doc.sequence =
        TokenSequence::from_tokens(rec["tokens"].get<std::vector<std::string>>());
    for (const auto& s : rec.value("spans", json::array())) {
      if (!s.contains("start") || !s.contains("end") || !s.contains("type")) {
        throw MalformedLine(line_no, "span record needs start, end, type");
      }
      const std::string type_name = s["type"].get<std::string>();
      if (!labels.contains(type_name)) throw UnknownType(type_name, line_no);
      doc.gold_spans.push_back(SpanAnnotation{
          s["start"].get<int>(), s["end"].get<int>(), labels.id(type_name)});
    }
    validate_spans(doc, line_no);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> load_nested(const std::string& path, const LabelSet& labels) {
  std::ifstream in(path);
  if (!in) throw IoFailure(path);
  return parse_nested(in, labels);
}

void write_nested(std::ostream& out, const std::vector<Document>& docs,
                  const LabelSet& labels) {
  for (const auto& doc : docs) {
    json rec;
    rec["doc_id"] = doc.doc_id;
    rec["tokens"] = doc.sequence.tokens;
    json spans = json::array();
    for (const auto& span : doc.gold_spans) {
      spans.push_back({{"start", span.start},
                       {"end", span.end},
                       {"type", labels.name(span.type_id)}});
    }
    rec["spans"] = std::move(spans);
    out << rec.dump() << "\n";
  }
}

std::vector<MrcInstance> build_instances(const Document& doc,
                                         const QueryTemplateSet& templates,
                                         const LabelSet& labels,
                                         QueryStyle style,
                                         TokenizerMode mode) {
  std::vector<MrcInstance> instances;
  instances.reserve(static_cast<size_t>(labels.size()));
  const int n = doc.sequence.size();
  for (int type_id = 0; type_id < labels.size(); ++type_id) {
    MrcInstance inst;
    inst.type_id = type_id;
    inst.query = tokenize(templates.query(labels.name(type_id), style), mode);
    inst.context = doc.sequence;
    inst.g_start.assign(static_cast<size_t>(n), 0.0);
    inst.g_end.assign(static_cast<size_t>(n), 0.0);
    for (const auto& span : doc.gold_spans) {
      if (span.type_id != type_id) continue;
      inst.g_start[static_cast<size_t>(span.start)] = 1.0;
      inst.g_end[static_cast<size_t>(span.end)] = 1.0;
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

}  // namespace mrcner
