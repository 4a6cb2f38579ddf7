#include "vrg/model/model.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "vrg/error.hpp"
#include "vrg/numerics/checkpoint.hpp"

namespace vrg {

data::EmbeddingTable make_embedding_table(const ModelConfig& config) {
  if (config.embedding_path.empty()) return data::EmbeddingTable(config.encoder.word_dim, config.embedding_seed);
  return data::EmbeddingTable::load_text(config.embedding_path, config.encoder.word_dim, config.embedding_seed);
}

Model::Model(ModelConfig config, data::Vocabulary vocab, data::EmbeddingTable table, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)), table_(std::move(table)) {
  config_.encoder.validate();
  if (config_.decoder.hidden != config_.encoder.hidden) {
    throw ConfigError("decoder hidden size must equal encoder hidden size (feat_v seeds the decoder state)");
  }
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  num::Rng rng(num::derive_seed(seed, "model.init"));
  enc::register_encoder_parameters(params_, config_.encoder, rng);
  dec::register_decoder_parameters(params_, config_.decoder, vocab_.size(), rng);
}

Model::Pass Model::forward(num::Tape& tape, const data::VideoFeatures& video, const data::RelationQuery& query,
                           num::Rng* dropout) const {
  Pass pass;
  pass.encoder = enc::encode(tape, params_, config_.encoder, video, query, table_, config_.dropout, dropout);
  const auto target = dec::target_sequence(query, vocab_, config_.encoder.use_predicate);
  pass.reconstruction = dec::reconstruction_loss(tape, params_, config_.decoder, pass.encoder.graph.feat_v, target,
                                                 config_.dropout, dropout);
  return pass;
}

double Model::loss(const data::VideoFeatures& video, const data::RelationQuery& query, num::Rng* dropout,
                   num::Gradients* grads) const {
  num::Tape tape;
  auto pass = forward(tape, video, query, dropout);
  const double value = pass.reconstruction.loss.value()[0];
  if (grads != nullptr) {
    tape.backward(pass.reconstruction.loss);
    *grads = tape.parameter_gradients();
  }
  return value;
}

enc::AttentionMaps Model::attend(const data::VideoFeatures& video, const data::RelationQuery& query) const {
  num::Tape tape;
  return enc::encode(tape, params_, config_.encoder, video, query, table_, 0.0, nullptr).maps();
}

namespace {

std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path + ": expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::size_t as_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("model config lacks " + key);
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace

void Model::save(const std::string& path) const {
  num::save_checkpoint(path, params_);
  std::ofstream out(path + ".cfg", std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path + ".cfg");
  const auto& e = config_.encoder;
  out << "# model sidecar for " << path << "\n";
  out << "frames=" << e.frames << "\nclip_length=" << e.clip_length << "\nregions=" << e.regions
      << "\nappearance_dim=" << e.appearance_dim << "\nregion_dim=" << e.region_dim << "\nword_dim=" << e.word_dim
      << "\nword_embed_dim=" << e.word_embed_dim << "\nhidden=" << e.hidden << "\nattention_dim=" << e.attention_dim
      << "\nuse_msg=" << e.use_msg << "\nuse_clip=" << e.use_clip << "\nuse_tau=" << e.use_tau
      << "\nuse_predicate=" << e.use_predicate << "\ntoken_embed_dim=" << config_.decoder.token_embed_dim
      << "\nmax_decode_length=" << config_.decoder.max_decode_length << "\nembedding_path=" << config_.embedding_path
      << "\nembedding_seed=" << config_.embedding_seed << "\nvocab=";
  for (std::size_t i = data::Vocabulary::kPad + 1; i < vocab_.size(); ++i) {
    if (i > data::Vocabulary::kPad + 1) out << ' ';
    out << vocab_.token(i);
  }
  out << '\n';
}

Model Model::load(const std::string& path) {
  const auto kv = read_kv(path + ".cfg");
  ModelConfig cfg;
  auto& e = cfg.encoder;
  e.frames = as_size(kv, "frames");
  e.clip_length = as_size(kv, "clip_length");
  e.regions = as_size(kv, "regions");
  e.appearance_dim = as_size(kv, "appearance_dim");
  e.region_dim = as_size(kv, "region_dim");
  e.word_dim = as_size(kv, "word_dim");
  e.word_embed_dim = as_size(kv, "word_embed_dim");
  e.hidden = as_size(kv, "hidden");
  e.attention_dim = as_size(kv, "attention_dim");
  e.use_msg = as_size(kv, "use_msg") != 0;
  e.use_clip = as_size(kv, "use_clip") != 0;
  e.use_tau = as_size(kv, "use_tau") != 0;
  e.use_predicate = as_size(kv, "use_predicate") != 0;
  cfg.decoder.hidden = e.hidden;
  cfg.decoder.token_embed_dim = as_size(kv, "token_embed_dim");
  cfg.decoder.max_decode_length = as_size(kv, "max_decode_length");
  cfg.embedding_path = kv.count("embedding_path") ? kv.at("embedding_path") : "";
  cfg.embedding_seed = as_size(kv, "embedding_seed");

  data::Vocabulary vocab;
  std::istringstream vs(kv.count("vocab") ? kv.at("vocab") : "");
  std::string tok;
  while (vs >> tok) vocab.add(tok);

  auto table = make_embedding_table(cfg);
  Model model(cfg, std::move(vocab), std::move(table), 0);
  num::assign_parameters(model.params_, num::load_checkpoint(path));
  return model;
}

}  // namespace vrg
