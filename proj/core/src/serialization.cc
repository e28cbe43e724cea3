#include "mrcner/serialization.h"

#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mrcner/errors.h"

namespace mrcner {

using json = nlohmann::json;

void write_metrics_record(std::ostream& out, const MetricsRecord& record) {
  json rec;
  rec["run_id"] = record.run_id;
  rec["epoch"] = record.epoch;
  rec["split"] = record.split;
  rec["P"] = record.precision;
  rec["R"] = record.recall;
  rec["F"] = record.f1;
  rec["loss_kind"] = record.loss_kind;
  rec["query_style"] = record.query_style;
  rec["fraction"] = record.fraction;
  rec["seed"] = record.seed;
  rec["train_loss"] = record.train_loss;
  out << rec.dump() << "\n";
}

void write_predictions(std::ostream& out, const std::string& doc_id,
                       const std::vector<PredictedSpan>& spans,
                       const LabelSet& labels) {
  json rec;
  rec["doc_id"] = doc_id;
  json arr = json::array();
  for (const auto& ps : spans) {
    auto [start, end] = to_paper_indices(ps.span);
    arr.push_back({{"start", start},
                   {"end", end},
                   {"type", labels.name(ps.span.type_id)},
                   {"p_start", ps.p_start},
                   {"p_end", ps.p_end}});
  }
  rec["spans"] = std::move(arr);
  out << rec.dump() << "\n";
}

SpansByDoc read_predictions(std::istream& in, const LabelSet& labels) {
  SpansByDoc result;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedLine(line_no, std::string("bad prediction record: ") + e.what());
    }
    if (!rec.contains("doc_id")) throw MalformedLine(line_no, "missing doc_id");
    auto& spans = result[rec["doc_id"].get<std::string>()];
    for (const auto& s : rec.value("spans", json::array())) {
      const std::string type_name = s.at("type").get<std::string>();
      if (!labels.contains(type_name)) throw UnknownType(type_name, line_no);
      spans.push_back(from_paper_indices(s.at("start").get<int>(),
                                         s.at("end").get<int>(),
                                         labels.id(type_name)));
    }
  }
  return result;
}

void write_ablation_table(std::ostream& out, const std::string& axis,
                          const std::vector<AblationRow>& rows) {
  out << axis << "\tP\tR\tF\tdev_F\tbest_epoch\n";
  std::ostringstream fmt;
  fmt << std::fixed << std::setprecision(4);
  for (const auto& row : rows) {
    fmt.str("");
    fmt << row.condition << '\t' << row.test.precision << '\t' << row.test.recall
        << '\t' << row.test.f1 << '\t' << row.dev_f1 << '\t' << row.best_epoch;
    out << fmt.str() << "\n";
  }
}

std::string format_eval_report(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "micro\tP=" << report.precision << "\tR=" << report.recall
      << "\tF=" << report.f1 << "\ttp=" << report.tp
      << "\tpred=" << report.predicted << "\tgold=" << report.gold << "\n";
  for (const auto& [name, tm] : report.per_type) {
    out << name << "\tP=" << tm.precision << "\tR=" << tm.recall
        << "\tF=" << tm.f1 << "\ttp=" << tm.tp << "\tpred=" << tm.predicted
        << "\tgold=" << tm.gold << "\n";
  }
  return out.str();
}

}  // namespace mrcner
