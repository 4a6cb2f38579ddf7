#include "vrg/encoder/encoder.hpp"

#include "vrg/error.hpp"
#include "vrg/numerics/lstm.hpp"

namespace vrg::enc {

using num::Activation;

void EncoderConfig::validate() const {
  for (auto [v, name] : {std::pair{frames, "frames"},
                         {clip_length, "clip_length"},
                         {regions, "regions"},
                         {appearance_dim, "appearance_dim"},
                         {region_dim, "region_dim"},
                         {word_dim, "word_dim"},
                         {word_embed_dim, "word_embed_dim"},
                         {hidden, "hidden"},
                         {attention_dim, "attention_dim"}}) {
    if (v == 0) throw ConfigError(std::string("encoder ") + name + " must be positive");
  }
  if (frames % clip_length != 0) {
    throw ConfigError("frames N=" + std::to_string(frames) + " is not divisible by clip length L=" +
                      std::to_string(clip_length));
  }
}

AttentionMaps EncoderOutput::maps() const {
  return {alpha_subject.value(), alpha_object.value(), graph.beta_frame.value(), graph.beta_clip.value()};
}

namespace {

void register_affine(num::ParameterSet& p, const std::string& prefix, std::size_t in, std::size_t out,
                     num::Rng& rng) {
  p.add(prefix + ".W", num::uniform_init({in, out}, in, rng));
  p.add(prefix + ".b", Tensor({out}));
}

void register_scorer(num::ParameterSet& p, const std::string& prefix, std::size_t key_dim, std::size_t query_dim,
                     std::size_t width, num::Rng& rng) {
  p.add(prefix + ".W1", num::uniform_init({key_dim + query_dim, width}, key_dim + query_dim, rng));
  p.add(prefix + ".b1", Tensor({width}));
  p.add(prefix + ".W2", num::uniform_init({width, 1}, width, rng));
}

Var bound_affine(Tape& tape, const num::ParameterSet& p, const std::string& prefix, Var x) {
  return num::affine(x, tape.parameter(p, prefix + ".W"), tape.parameter(p, prefix + ".b"));
}

Var uniform_row(Tape& tape, std::size_t n) { return tape.constant(Tensor({1, n}, 1.0 / static_cast<double>(n))); }

}  // namespace

void register_encoder_parameters(num::ParameterSet& params, const EncoderConfig& cfg, num::Rng& rng) {
  cfg.validate();
  const auto d = cfg.region_dim, k = cfg.hidden, a = cfg.attention_dim;
  register_affine(params, "enc.app", cfg.appearance_dim, d, rng);
  register_affine(params, "enc.box", 5, d, rng);
  register_affine(params, "enc.word", cfg.word_dim, cfg.word_embed_dim, rng);
  register_scorer(params, "enc.sau", d, cfg.word_embed_dim, a, rng);
  if (cfg.use_msg) {
    params.add("enc.msg.Wso", num::uniform_init({cfg.regions, d}, cfg.regions, rng));
    params.add("enc.msg.Wos", num::uniform_init({cfg.regions, d}, cfg.regions, rng));
  }
  register_affine(params, "enc.fuse", 2 * d, d, rng);
  num::register_lstm(params, "enc.lstm1", d, k, rng);
  register_affine(params, "enc.rel", 3 * cfg.word_dim, k, rng);
  if (cfg.use_tau) {
    if (cfg.use_clip) {
      register_scorer(params, "enc.tau2", k, k, a, rng);
      num::register_lstm(params, "enc.lstm2", k, k, rng);
    }
    register_scorer(params, "enc.tau1", k, k, a, rng);
  }
}

Scorer bind_scorer(Tape& tape, const num::ParameterSet& params, const std::string& prefix) {
  return {tape.parameter(params, prefix + ".W1"), tape.parameter(params, prefix + ".b1"),
          tape.parameter(params, prefix + ".W2")};
}

Var region_embed(Tape& tape, const num::ParameterSet& params, const data::VideoFeatures& video) {
  const auto count = video.regions.size();
  const auto d_app = video.appearance_dim;
  Tensor app({count, d_app});
  Tensor geo({count, 5});
  for (std::size_t r = 0; r < count; ++r) {
    const auto& reg = video.regions[r];
    if (reg.appearance.size() != d_app) throw DimensionError("region appearance dimension mismatch");
    std::copy(reg.appearance.begin(), reg.appearance.end(), app.data().begin() + r * d_app);
    const auto g = data::geometry_feature(reg.box, video.frame_width, video.frame_height);
    std::copy(g.begin(), g.end(), geo.data().begin() + r * 5);
  }
  Var fa = num::activate(bound_affine(tape, params, "enc.app", tape.constant(std::move(app))), Activation::Relu);
  Var fb = num::activate(bound_affine(tape, params, "enc.box", tape.constant(std::move(geo))), Activation::Relu);
  return num::add(fa, fb);
}

Var attention_scores(Var keys, Var query, const Scorer& scorer, std::size_t group) {
  const auto key_dim = keys.cols();
  const auto query_dim = query.cols();
  if (scorer.w1.rows() != key_dim + query_dim) {
    throw DimensionError("scorer expects " + std::to_string(scorer.w1.rows()) + " input features, got key " +
                         std::to_string(key_dim) + " + query " + std::to_string(query_dim));
  }
  if (group == 0 || keys.rows() % group != 0) throw DimensionError("attention group does not divide key rows");
  // W1[key, query] = key·W1_k + query·W1_q, the query half shared by every key.
  Var w_key = num::slice_rows(scorer.w1, 0, key_dim);
  Var w_query = num::slice_rows(scorer.w1, key_dim, query_dim);
  Var shared = num::add_row(num::matmul(query, w_query), scorer.b1);
  Var hidden = num::activate(num::add_row(num::matmul(keys, w_key), shared), Activation::Tanh);
  Var scores = num::matmul(hidden, scorer.w2);
  return num::softmax_rows(num::reshape(scores, keys.rows() / group, group));
}

SpatialAttention spatial_attend(Var regions, Var query, const Scorer& scorer, std::size_t regions_per_frame) {
  Var alpha = attention_scores(regions, query, scorer, regions_per_frame);
  return {alpha, num::block_weighted_sum(alpha, regions)};
}

std::pair<Var, Var> shift_messages(Var alpha_s, Var alpha_o, Var f_s, Var f_o, Var w_so, Var w_os, bool enabled) {
  if (!enabled) return {f_s, f_o};
  Var f_so = num::activate(num::matmul(alpha_s, w_so), Activation::Relu);
  Var f_os = num::activate(num::matmul(alpha_o, w_os), Activation::Relu);
  return {num::add(f_s, f_os), num::add(f_o, f_so)};
}

Var fuse_pair(Var f_s, Var f_o, Var w3, Var b3) { return num::affine(num::concat_cols(f_s, f_o), w3, b3); }

GraphEmbedding encode_video(Tape& tape, const num::ParameterSet& params, const EncoderConfig& cfg, Var node_inputs,
                            Var relation) {
  cfg.validate();
  const auto n = cfg.frames, l = cfg.clip_length, h = cfg.clips();
  if (node_inputs.rows() != n) {
    throw DimensionError("encode_video: expected " + std::to_string(n) + " node inputs, got " +
                         std::to_string(node_inputs.rows()));
  }
  GraphEmbedding g;
  g.node_inputs = node_inputs;

  auto lstm1 = num::bind_lstm(tape, params, "enc.lstm1");
  g.frame_states = num::stack_rows(num::lstm_sequence(node_inputs, num::zero_state(tape, cfg.hidden), lstm1));

  // Clip representatives: LSTM_l1 output at the last frame of each clip (steps L, 2L, ..., N).
  std::vector<std::size_t> clip_rows;
  for (std::size_t c = 1; c <= h; ++c) clip_rows.push_back(c * l - 1);
  g.clip_states = num::gather_rows(g.frame_states, clip_rows);

  if (!cfg.use_tau) {
    g.beta_clip = uniform_row(tape, h);
    g.beta_frame = uniform_row(tape, n);
    g.feat_v = num::mean_rows(g.frame_states);
    return g;
  }

  Var frame_query = relation;
  if (cfg.use_clip) {
    g.beta_clip = attention_scores(g.clip_states, relation, bind_scorer(tape, params, "enc.tau2"), h);
    auto lstm2 = num::bind_lstm(tape, params, "enc.lstm2");
    auto clip_seq = num::lstm_sequence(num::scale_rows(g.clip_states, g.beta_clip),
                                       num::zero_state(tape, cfg.hidden), lstm2);
    g.clip_summary = clip_seq.back();
    frame_query = g.clip_summary;
  } else {
    g.beta_clip = uniform_row(tape, h);
  }
  g.beta_frame = attention_scores(g.frame_states, frame_query, bind_scorer(tape, params, "enc.tau1"), n);
  g.feat_v = num::matmul(g.beta_frame, g.frame_states);
  return g;
}

Tensor relation_words(const data::RelationQuery& query, const data::EmbeddingTable& table, bool use_predicate) {
  const auto dim = table.dimension();
  Tensor words({1, 3 * dim});
  const auto s = data::embed_tokens(query.subject, table, data::EmbedMode::Average);
  const auto o = data::embed_tokens(query.object, table, data::EmbedMode::Average);
  std::copy(s.begin(), s.end(), words.data().begin());
  if (use_predicate) {
    const auto p = data::embed_tokens(query.predicate, table, data::EmbedMode::Average);
    std::copy(p.begin(), p.end(), words.data().begin() + dim);
  }
  std::copy(o.begin(), o.end(), words.data().begin() + 2 * dim);
  return words;
}

Var relation_embedding(Tape& tape, const num::ParameterSet& params, const data::RelationQuery& query,
                       const data::EmbeddingTable& table, bool use_predicate) {
  Var words = tape.constant(relation_words(query, table, use_predicate));
  return num::activate(bound_affine(tape, params, "enc.rel", words), Activation::Relu);
}

Var word_query(Tape& tape, const num::ParameterSet& params, const data::Tokens& tokens,
               const data::EmbeddingTable& table) {
  auto v = data::embed_tokens(tokens, table, data::EmbedMode::Average);
  const auto dim = v.size();
  Var words = tape.constant(Tensor({1, dim}, std::move(v)));
  return bound_affine(tape, params, "enc.word", words);
}

EncoderOutput encode(Tape& tape, const num::ParameterSet& params, const EncoderConfig& cfg,
                     const data::VideoFeatures& video, const data::RelationQuery& query,
                     const data::EmbeddingTable& table, double dropout_rate, num::Rng* dropout) {
  cfg.validate();
  if (video.frame_count() != cfg.frames || video.regions_per_frame != cfg.regions ||
      video.appearance_dim != cfg.appearance_dim) {
    throw DimensionError("video " + video.video_id + " has N=" + std::to_string(video.frame_count()) +
                         " M=" + std::to_string(video.regions_per_frame) + " d_app=" +
                         std::to_string(video.appearance_dim) + ", model expects N=" + std::to_string(cfg.frames) +
                         " M=" + std::to_string(cfg.regions) + " d_app=" + std::to_string(cfg.appearance_dim));
  }
  if (table.dimension() != cfg.word_dim) {
    throw DimensionError("embedding table dimension " + std::to_string(table.dimension()) +
                         " differs from encoder word_dim " + std::to_string(cfg.word_dim));
  }

  EncoderOutput out;
  Var regions = region_embed(tape, params, video);
  const Scorer sau = bind_scorer(tape, params, "enc.sau");
  auto subj = spatial_attend(regions, word_query(tape, params, query.subject, table), sau, cfg.regions);
  auto obj = spatial_attend(regions, word_query(tape, params, query.object, table), sau, cfg.regions);
  out.alpha_subject = subj.alpha;
  out.alpha_object = obj.alpha;

  Var w_so, w_os;
  if (cfg.use_msg) {
    w_so = tape.parameter(params, "enc.msg.Wso");
    w_os = tape.parameter(params, "enc.msg.Wos");
  }
  auto [f_s, f_o] = shift_messages(subj.alpha, obj.alpha, subj.attended, obj.attended, w_so, w_os, cfg.use_msg);
  Var nodes = fuse_pair(f_s, f_o, tape.parameter(params, "enc.fuse.W"), tape.parameter(params, "enc.fuse.b"));
  if (dropout != nullptr && dropout_rate > 0.0) {
    nodes = num::mask(nodes, num::dropout_mask(nodes.rows(), nodes.cols(), dropout_rate, *dropout));
  }

  out.relation = relation_embedding(tape, params, query, table, cfg.use_predicate);
  out.graph = encode_video(tape, params, cfg, nodes, out.relation);
  return out;
}

}  // namespace vrg::enc
