// Command-line front end: corpus synthesis, training, prediction,
// evaluation and ablations over the query-span extraction pipeline.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mrcner/checkpoint.h"
#include "mrcner/errors.h"
#include "mrcner/ingestion.h"
#include "mrcner/pipeline.h"
#include "mrcner/serialization.h"
#include "mrcner/synth.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mrcner;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  std::string train_path, dev_path, test_path, templates_path;
  std::string tokenizer = "word";
  std::string query_style = "natural";
  std::string loss = "dice";
  double lambda = 1.0;
  std::string strategy = "per_token";
  double threshold = 0.5;
  int layers = 2, heads = 4, d_model = 64, d_ff = 256, max_positions = 512;
  double dropout = 0.1;
  std::string optimizer = "adam";
  double lr = 1e-3;
  int batch_size = 32;
  int epochs = 30;
  uint64_t seed = 1;
  std::string out_dir;
  std::string run_id;
};

json to_json(const RunConfig& cfg) {
  json j;
  j["train"] = cfg.train_path;
  j["dev"] = cfg.dev_path;
  j["test"] = cfg.test_path;
  j["templates"] = cfg.templates_path;
  j["tokenizer"] = cfg.tokenizer;
  j["query_style"] = cfg.query_style;
  j["loss"] = cfg.loss;
  j["lambda"] = cfg.lambda;
  j["strategy"] = cfg.strategy;
  j["threshold"] = cfg.threshold;
  j["layers"] = cfg.layers;
  j["heads"] = cfg.heads;
  j["d_model"] = cfg.d_model;
  j["d_ff"] = cfg.d_ff;
  j["max_positions"] = cfg.max_positions;
  j["dropout"] = cfg.dropout;
  j["optimizer"] = cfg.optimizer;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  return j;
}

// Flags beat the config file; the config file beats defaults.
void merge_config_file(const std::string& path, CLI::App* cmd, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("bad config file " + path + ": " + e.what());
  }
  auto merge = [&](const char* key, const char* flag, auto& field) {
    if (!j.contains(key)) return;
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) return;
    j.at(key).get_to(field);
  };
  merge("train", "--train", cfg.train_path);
  merge("dev", "--dev", cfg.dev_path);
  merge("test", "--test", cfg.test_path);
  merge("templates", "--templates", cfg.templates_path);
  merge("tokenizer", "--tokenizer", cfg.tokenizer);
  merge("query_style", "--query-style", cfg.query_style);
  merge("loss", "--loss", cfg.loss);
  merge("lambda", "--lambda", cfg.lambda);
  merge("strategy", "--strategy", cfg.strategy);
  merge("threshold", "--threshold", cfg.threshold);
  merge("layers", "--layers", cfg.layers);
  merge("heads", "--heads", cfg.heads);
  merge("d_model", "--d-model", cfg.d_model);
  merge("d_ff", "--d-ff", cfg.d_ff);
  merge("max_positions", "--max-positions", cfg.max_positions);
  merge("dropout", "--dropout", cfg.dropout);
  merge("optimizer", "--optimizer", cfg.optimizer);
  merge("lr", "--lr", cfg.lr);
  merge("batch_size", "--batch-size", cfg.batch_size);
  merge("epochs", "--epochs", cfg.epochs);
  merge("seed", "--seed", cfg.seed);
  merge("out", "--out", cfg.out_dir);
  merge("run_id", "--run-id", cfg.run_id);
}

void add_train_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file; flags override");
  cmd->add_option("--train", cfg.train_path, "training corpus");
  cmd->add_option("--dev", cfg.dev_path, "development corpus");
  cmd->add_option("--test", cfg.test_path, "optional test corpus");
  cmd->add_option("--templates", cfg.templates_path, "query template file");
  cmd->add_option("--tokenizer", cfg.tokenizer, "word|char");
  cmd->add_option("--query-style", cfg.query_style, "index|pseudo|natural");
  cmd->add_option("--loss", cfg.loss, "dice|cross_entropy");
  cmd->add_option("--lambda", cfg.lambda, "dice smoothing");
  cmd->add_option("--strategy", cfg.strategy, "per_token|position_classifier");
  cmd->add_option("--threshold", cfg.threshold, "decode threshold");
  cmd->add_option("--layers", cfg.layers);
  cmd->add_option("--heads", cfg.heads);
  cmd->add_option("--d-model", cfg.d_model);
  cmd->add_option("--d-ff", cfg.d_ff);
  cmd->add_option("--max-positions", cfg.max_positions);
  cmd->add_option("--dropout", cfg.dropout);
  cmd->add_option("--optimizer", cfg.optimizer, "adam|sgd");
  cmd->add_option("--lr", cfg.lr);
  cmd->add_option("--batch-size", cfg.batch_size);
  cmd->add_option("--epochs", cfg.epochs);
  cmd->add_option("--seed", cfg.seed);
  cmd->add_option("--out", cfg.out_dir, "run directory (default runs/<id>-<time>)");
  cmd->add_option("--run-id", cfg.run_id, "run id (default config hash)");
}

uint64_t fnv1a(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string derive_run_id(const RunConfig& cfg) {
  std::ostringstream out;
  out << std::hex << fnv1a(to_json(cfg).dump());
  return "run-" + out.str().substr(0, 8);
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&t));
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is required");
  if (!fs::exists(path)) {
    throw ConfigError(std::string(what) + " file not found: " + path);
  }
}

std::vector<Document> load_corpus(const std::string& path, const LabelSet& labels) {
  if (path.ends_with(".bio") || path.ends_with(".tsv")) {
    return load_bio(path, labels);
  }
  return load_nested(path, labels);
}

TrainConfig to_train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.encoder.layers = cfg.layers;
  tc.encoder.heads = cfg.heads;
  tc.encoder.d_model = cfg.d_model;
  tc.encoder.d_ff = cfg.d_ff;
  tc.encoder.max_positions = cfg.max_positions;
  tc.encoder.dropout = cfg.dropout;
  tc.strategy = parse_span_strategy(cfg.strategy);
  tc.query_style = parse_query_style(cfg.query_style);
  tc.tokenizer = parse_tokenizer_mode(cfg.tokenizer);
  tc.loss.kind = parse_loss_kind(cfg.loss);
  tc.loss.lambda = cfg.lambda;
  tc.decode.threshold = cfg.threshold;
  tc.decode.strategy = tc.strategy;
  tc.optimizer = cfg.optimizer;
  tc.lr = cfg.lr;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.seed = cfg.seed;
  return tc;
}

std::string resolve_run_dir(RunConfig& cfg) {
  if (cfg.run_id.empty()) cfg.run_id = derive_run_id(cfg);
  std::string dir = cfg.out_dir;
  if (dir.empty()) dir = "runs/" + cfg.run_id + "-" + timestamp_now();
  fs::create_directories(dir);
  return dir;
}

void write_run_metrics(const std::string& path, const RunConfig& cfg,
                       const TrainResult& result, const EvalReport* test_report,
                       double fraction = 1.0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure(path);
  for (const auto& em : result.history) {
    MetricsRecord rec;
    rec.run_id = cfg.run_id;
    rec.epoch = em.epoch;
    rec.split = "dev";
    rec.precision = em.dev.precision;
    rec.recall = em.dev.recall;
    rec.f1 = em.dev.f1;
    rec.loss_kind = cfg.loss;
    rec.query_style = cfg.query_style;
    rec.fraction = fraction;
    rec.seed = cfg.seed;
    rec.train_loss = em.train_loss;
    write_metrics_record(out, rec);
  }
  if (test_report != nullptr) {
    MetricsRecord rec;
    rec.run_id = cfg.run_id;
    rec.epoch = result.best_epoch;
    rec.split = "test";
    rec.precision = test_report->precision;
    rec.recall = test_report->recall;
    rec.f1 = test_report->f1;
    rec.loss_kind = cfg.loss;
    rec.query_style = cfg.query_style;
    rec.fraction = fraction;
    rec.seed = cfg.seed;
    rec.train_loss = result.history.empty() ? 0.0 : result.history.back().train_loss;
    write_metrics_record(out, rec);
  }
}

int cmd_synth(const std::string& out_dir, const SynthConfig& config) {
  SynthCorpus corpus = generate_corpus(config);
  write_corpus(out_dir, corpus);
  std::cout << "wrote " << corpus.train.size() << "/" << corpus.dev.size() << "/"
            << corpus.test.size() << " train/dev/test sentences to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(RunConfig cfg) {
  require_file(cfg.templates_path, "templates");
  require_file(cfg.train_path, "train corpus");
  require_file(cfg.dev_path, "dev corpus");
  if (!cfg.test_path.empty()) require_file(cfg.test_path, "test corpus");

  QueryTemplateSet templates = QueryTemplateSet::load(cfg.templates_path);
  LabelSet labels(templates);
  auto train_docs = load_corpus(cfg.train_path, labels);
  auto dev_docs = load_corpus(cfg.dev_path, labels);

  const std::string run_dir = resolve_run_dir(cfg);
  TrainConfig tc = to_train_config(cfg);
  TrainResult result = train(train_docs, dev_docs, templates, labels, tc);

  for (const auto& em : result.history) {
    std::cout << "epoch " << em.epoch << "  train_loss " << em.train_loss
              << "  dev_f1 " << em.dev.f1 << "\n";
  }
  std::cout << "best epoch " << result.best_epoch << "  dev_f1 " << result.best_f1
            << "\n";

  InferenceDefaults defaults{tc.query_style, tc.tokenizer, tc.decode.threshold};
  save_checkpoint(run_dir + "/checkpoint.bin", result.best_params, result.vocab,
                  defaults);

  EvalReport test_report;
  bool have_test = false;
  if (!cfg.test_path.empty()) {
    auto test_docs = load_corpus(cfg.test_path, labels);
    test_report = evaluate(
        predict_corpus(test_docs, result.best_params, result.vocab, templates,
                       labels, tc.query_style, tc.tokenizer, tc.decode),
        gold_spans_by_doc(test_docs), labels);
    have_test = true;
    std::cout << "test\n" << format_eval_report(test_report);
  }
  write_run_metrics(run_dir + "/metrics.jsonl", cfg, result,
                    have_test ? &test_report : nullptr);

  std::ofstream cfg_out(run_dir + "/config.json", std::ios::binary);
  cfg_out << to_json(cfg).dump(2) << "\n";
  std::cout << "run dir: " << run_dir << "\n";
  return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& input_path,
                const std::string& templates_path, const std::string& out_path,
                double threshold_override, const std::string& style_override) {
  require_file(checkpoint_path, "checkpoint");
  require_file(input_path, "input corpus");
  require_file(templates_path, "templates");

  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  QueryTemplateSet templates = QueryTemplateSet::load(templates_path);
  LabelSet labels(templates);
  auto docs = load_corpus(input_path, labels);

  DecodeConfig decode;
  decode.strategy = ckpt.params.head.strategy;
  decode.threshold =
      threshold_override > 0.0 ? threshold_override : ckpt.defaults.threshold;
  const QueryStyle style = style_override.empty()
                               ? ckpt.defaults.query_style
                               : parse_query_style(style_override);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoFailure(out_path);
  for (const auto& doc : docs) {
    auto spans = run_algorithm1(doc, ckpt.params, ckpt.vocab, templates, labels,
                                style, ckpt.defaults.tokenizer, decode);
    write_predictions(out, doc.doc_id, spans, labels);
  }
  std::cout << "wrote predictions for " << docs.size() << " documents to "
            << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& predictions_path, const std::string& gold_path,
             const std::string& templates_path, std::string out_path) {
  require_file(predictions_path, "predictions");
  require_file(gold_path, "gold corpus");
  require_file(templates_path, "templates");

  QueryTemplateSet templates = QueryTemplateSet::load(templates_path);
  LabelSet labels(templates);
  auto gold_docs = load_corpus(gold_path, labels);

  std::ifstream pred_in(predictions_path);
  if (!pred_in) throw IoFailure(predictions_path);
  SpansByDoc predicted = read_predictions(pred_in, labels);
  SpansByDoc gold = gold_spans_by_doc(gold_docs);
  // Documents with no extracted spans may be absent from the file.
  for (const auto& [doc_id, spans] : gold) {
    predicted.try_emplace(doc_id);
  }

  EvalReport report = evaluate(predicted, gold, labels);
  std::cout << format_eval_report(report);

  if (out_path.empty()) out_path = predictions_path + ".metrics.json";
  json j;
  j["micro"] = {{"P", report.precision}, {"R", report.recall}, {"F", report.f1},
                {"tp", report.tp},       {"predicted", report.predicted},
                {"gold", report.gold}};
  json per_type;
  for (const auto& [name, tm] : report.per_type) {
    per_type[name] = {{"P", tm.precision}, {"R", tm.recall}, {"F", tm.f1},
                      {"tp", tm.tp},       {"predicted", tm.predicted},
                      {"gold", tm.gold}};
  }
  j["per_type"] = std::move(per_type);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoFailure(out_path);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_ablate(RunConfig cfg, const std::string& axis,
               const std::string& fractions_csv) {
  require_file(cfg.templates_path, "templates");
  require_file(cfg.train_path, "train corpus");
  require_file(cfg.dev_path, "dev corpus");
  require_file(cfg.test_path, "test corpus");

  QueryTemplateSet templates = QueryTemplateSet::load(cfg.templates_path);
  LabelSet labels(templates);
  auto train_docs = load_corpus(cfg.train_path, labels);
  auto dev_docs = load_corpus(cfg.dev_path, labels);
  auto test_docs = load_corpus(cfg.test_path, labels);

  const std::string run_dir = resolve_run_dir(cfg);
  TrainConfig tc = to_train_config(cfg);

  std::vector<AblationRow> rows;
  if (axis == "query") {
    rows = ablate_query_style(train_docs, dev_docs, test_docs, templates, labels, tc);
  } else if (axis == "loss") {
    rows = ablate_loss(train_docs, dev_docs, test_docs, templates, labels, tc);
  } else if (axis == "fraction") {
    std::vector<double> fractions;
    std::stringstream ss(fractions_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) fractions.push_back(std::stod(item));
    }
    if (fractions.empty()) throw ConfigError("no fractions given");
    rows = ablate_data_fraction(train_docs, dev_docs, test_docs, templates, labels,
                                tc, fractions);
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "' (query|loss|fraction)");
  }

  const std::string table_path = run_dir + "/ablation.tsv";
  std::ofstream table(table_path, std::ios::binary);
  if (!table) throw IoFailure(table_path);
  write_ablation_table(table, axis, rows);

  for (const auto& row : rows) {
    RunConfig row_cfg = cfg;
    if (axis == "query") row_cfg.query_style = row.condition;
    if (axis == "loss") row_cfg.loss = row.condition;
    double fraction = 1.0;
    if (axis == "fraction") fraction = std::stod(row.condition);
    const std::string cond_dir = run_dir + "/" + row.condition;
    fs::create_directories(cond_dir);
    write_run_metrics(cond_dir + "/metrics.jsonl", row_cfg, row.result, &row.test,
                      fraction);
    std::cout << axis << "=" << row.condition << "  test_f1 " << row.test.f1
              << "  (dev_f1 " << row.dev_f1 << ", best epoch " << row.best_epoch
              << ")\n";
  }
  std::cout << "ablation table: " << table_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query-driven span extraction for named entities"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic nested corpus");
  SynthConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--size", synth_cfg.train_size, "training sentences");
  synth->add_option("--dev-size", synth_cfg.dev_size);
  synth->add_option("--test-size", synth_cfg.test_size);
  synth->add_option("--nesting-rate", synth_cfg.nesting_rate);
  synth->add_option("--imbalance", synth_cfg.imbalance);
  synth->add_option("--cue-rate", synth_cfg.cue_rate);
  synth->add_option("--seed", synth_cfg.seed);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  RunConfig train_rc;
  std::string train_config_path;
  add_train_options(train_cmd, train_rc, train_config_path);

  // predict
  auto* predict = app.add_subcommand("predict", "extract spans with a checkpoint");
  std::string p_ckpt, p_input, p_templates, p_out, p_style;
  double p_threshold = 0.0;
  predict->add_option("--checkpoint", p_ckpt)->required();
  predict->add_option("--input", p_input)->required();
  predict->add_option("--templates", p_templates)->required();
  predict->add_option("--out", p_out)->required();
  predict->add_option("--threshold", p_threshold, "override stored threshold");
  predict->add_option("--query-style", p_style, "override stored style");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold");
  std::string e_pred, e_gold, e_templates, e_out;
  eval_cmd->add_option("--predictions", e_pred)->required();
  eval_cmd->add_option("--gold", e_gold)->required();
  eval_cmd->add_option("--templates", e_templates)->required();
  eval_cmd->add_option("--out", e_out, "metrics json path");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run an ablation axis");
  RunConfig ablate_rc;
  std::string ablate_config_path, ablate_axis, ablate_fractions = "0.25,0.5,1.0";
  add_train_options(ablate, ablate_rc, ablate_config_path);
  ablate->add_option("--axis", ablate_axis, "query|loss|fraction")->required();
  ablate->add_option("--fractions", ablate_fractions, "csv list for axis=fraction");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth(synth_out, synth_cfg);
    if (train_cmd->parsed()) {
      if (!train_config_path.empty()) {
        merge_config_file(train_config_path, train_cmd, train_rc);
      }
      return cmd_train(train_rc);
    }
    if (predict->parsed()) {
      return cmd_predict(p_ckpt, p_input, p_templates, p_out, p_threshold, p_style);
    }
    if (eval_cmd->parsed()) return cmd_eval(e_pred, e_gold, e_templates, e_out);
    if (ablate->parsed()) {
      if (!ablate_config_path.empty()) {
        merge_config_file(ablate_config_path, ablate, ablate_rc);
      }
      return cmd_ablate(ablate_rc, ablate_axis, ablate_fractions);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
