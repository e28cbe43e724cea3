#include "mrcner/checkpoint.h"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mrcner/errors.h"

namespace mrcner {

using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'R', 'C', 'N'};

void write_u32(std::ostream& out, uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

uint32_t read_u32(std::istream& in) {
  char buf[4];
  in.read(buf, 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab, const InferenceDefaults& defaults) {
  auto& mutable_params = const_cast<ModelParams&>(params);
  auto refs = tensor_refs(mutable_params);

  json header;
  header["schema_version"] = ModelParams::kSchemaVersion;
  header["encoder"] = {{"layers", params.config.layers},
                       {"heads", params.config.heads},
                       {"d_model", params.config.d_model},
                       {"d_ff", params.config.d_ff},
                       {"max_positions", params.config.max_positions},
                       {"dropout", params.config.dropout}};
  header["strategy"] = to_string(params.head.strategy);
  header["defaults"] = {{"query_style", to_string(defaults.query_style)},
                        {"tokenizer", to_string(defaults.tokenizer)},
                        {"threshold", defaults.threshold}};
  header["vocab"] = vocab.tokens();
  json tensors = json::array();
  for (const auto& ref : refs) {
    tensors.push_back({{"name", ref.name}, {"rows", ref.rows}, {"cols", ref.cols}});
  }
  header["tensors"] = std::move(tensors);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure(path);
  out.write(kMagic, 4);
  write_u32(out, ModelParams::kSchemaVersion);
  const std::string header_text = header.dump();
  write_u32(out, static_cast<uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& ref : refs) {
    out.write(reinterpret_cast<const char*>(ref.data),
              static_cast<std::streamsize>(ref.size() * sizeof(double)));
  }
  if (!out) throw IoFailure(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure(path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw SchemaMismatch("not a checkpoint file: " + path);
  }
  const uint32_t version = read_u32(in);
  if (version != ModelParams::kSchemaVersion) {
    throw SchemaMismatch("checkpoint schema version " + std::to_string(version) +
                         " does not match binary version " +
                         std::to_string(ModelParams::kSchemaVersion));
  }
  const uint32_t header_len = read_u32(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), header_len);
  if (!in) throw SchemaMismatch("truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::parse_error& e) {
    throw SchemaMismatch(std::string("bad checkpoint header: ") + e.what());
  }
  if (header.value("schema_version", 0u) != ModelParams::kSchemaVersion) {
    throw SchemaMismatch("checkpoint header schema version mismatch");
  }

  Checkpoint ckpt;
  const auto& enc = header.at("encoder");
  EncoderConfig config;
  config.layers = enc.at("layers").get<int>();
  config.heads = enc.at("heads").get<int>();
  config.d_model = enc.at("d_model").get<int>();
  config.d_ff = enc.at("d_ff").get<int>();
  config.max_positions = enc.at("max_positions").get<int>();
  config.dropout = enc.at("dropout").get<double>();
  config.validate();

  ckpt.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  const auto& defs = header.at("defaults");
  ckpt.defaults.query_style = parse_query_style(defs.at("query_style").get<std::string>());
  ckpt.defaults.tokenizer = parse_tokenizer_mode(defs.at("tokenizer").get<std::string>());
  ckpt.defaults.threshold = defs.at("threshold").get<double>();

  std::mt19937_64 rng(0);
  ckpt.params = init_params(config, parse_span_strategy(header.at("strategy").get<std::string>()),
                            ckpt.vocab.size(), rng);
  auto refs = tensor_refs(ckpt.params);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != refs.size()) {
    throw SchemaMismatch("checkpoint tensor list does not match model layout");
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    const auto& meta = tensors[i];
    if (meta.at("name").get<std::string>() != refs[i].name ||
        meta.at("rows").get<Eigen::Index>() != refs[i].rows ||
        meta.at("cols").get<Eigen::Index>() != refs[i].cols) {
      throw SchemaMismatch("checkpoint tensor '" + refs[i].name + "' shape mismatch");
    }
    in.read(reinterpret_cast<char*>(refs[i].data),
            static_cast<std::streamsize>(refs[i].size() * sizeof(double)));
  }
  if (!in) throw SchemaMismatch("truncated checkpoint tensors: " + path);
  if (!all_finite(ckpt.params)) {
    throw SchemaMismatch("checkpoint holds non-finite parameters: " + path);
  }
  return ckpt;
}

}  // namespace mrcner
