#pragma once

#include <cstddef>
#include <vector>

#include "vrg/data/embedding.hpp"
#include "vrg/data/relation.hpp"
#include "vrg/data/video_features.hpp"
#include "vrg/numerics/autodiff.hpp"
#include "vrg/numerics/parameters.hpp"

namespace vrg::enc {

using num::Tape;
using num::Tensor;
using num::Var;

struct EncoderConfig {
  std::size_t frames = 120;        // N
  std::size_t clip_length = 12;    // L
  std::size_t regions = 40;        // M
  std::size_t appearance_dim = 2048;
  std::size_t region_dim = 256;    // d
  std::size_t word_dim = 300;
  std::size_t word_embed_dim = 256;
  std::size_t hidden = 512;        // k
  std::size_t attention_dim = 256; // width of the tanh layer in every scorer
  bool use_msg = true;
  bool use_clip = true;
  bool use_tau = true;
  bool use_predicate = true;

  std::size_t clips() const { return clip_length ? frames / clip_length : 0; }
  /// Throws ConfigError when N is not a multiple of L or a dimension is zero.
  void validate() const;
};

/// Attention values for one (video, relation) pair, detached from the tape.
struct AttentionMaps {
  Tensor alpha_subject;  // N × M
  Tensor alpha_object;   // N × M
  Tensor beta_frame;     // 1 × N
  Tensor beta_clip;      // 1 × H
};

/// Differentiable pieces of one encoder pass.
struct GraphEmbedding {
  Var node_inputs;   // N × d
  Var frame_states;  // N × k
  Var clip_states;   // H × k
  Var clip_summary;  // 1 × k, final LSTM_l2 output (empty id when use_clip=false)
  Var feat_v;        // 1 × k
  Var beta_frame;    // 1 × N
  Var beta_clip;     // 1 × H
};

struct EncoderOutput {
  GraphEmbedding graph;
  Var alpha_subject;
  Var alpha_object;
  Var relation;  // f_R, 1 × k
  AttentionMaps maps() const;
};

void register_encoder_parameters(num::ParameterSet& params, const EncoderConfig& cfg, num::Rng& rng);

/// Weights of one concat→tanh→linear→softmax scorer.
struct Scorer {
  Var w1;  // (key_dim + query_dim) × a
  Var b1;  // a
  Var w2;  // a × 1
};
Scorer bind_scorer(Tape& tape, const num::ParameterSet& params, const std::string& prefix);

/// ReLU(f_app·Wa + ba) + ReLU(f_B·Wb + bb) for every region of the video, (N·M) × d.
Var region_embed(Tape& tape, const num::ParameterSet& params, const data::VideoFeatures& video);

/// Scores s_j = W2·tanh(W1[key_j, query] + b1) for the rows of `keys`
/// (grouped `group` rows at a time) and normalizes each group with softmax.
/// Returns a (rows/group) × group matrix.
Var attention_scores(Var keys, Var query, const Scorer& scorer, std::size_t group);

struct SpatialAttention {
  Var alpha;     // N × M
  Var attended;  // N × d, f = Σ_j α_j f(B_j)
};
/// Per-frame spatial attention over `regions` ((N·M) × d) for one query (1 × d').
SpatialAttention spatial_attend(Var regions, Var query, const Scorer& scorer, std::size_t regions_per_frame);

/// f_s' = f_s + ReLU(α_o·W_os), f_o' = f_o + ReLU(α_s·W_so); identity when disabled.
std::pair<Var, Var> shift_messages(Var alpha_s, Var alpha_o, Var f_s, Var f_o, Var w_so, Var w_os, bool enabled);

/// f_i = [f_s, f_o]·W3 + b3.
Var fuse_pair(Var f_s, Var f_o, Var w3, Var b3);

/// Hierarchical temporal encoding of the N node inputs conditioned on f_R.
GraphEmbedding encode_video(Tape& tape, const num::ParameterSet& params, const EncoderConfig& cfg, Var node_inputs,
                            Var relation);

/// The raw 3·word_dim concatenation [avg(S), avg(P) or 0, avg(O)].
Tensor relation_words(const data::RelationQuery& query, const data::EmbeddingTable& table, bool use_predicate);
/// f_R = ReLU([S, P, O]·W + b).
Var relation_embedding(Tape& tape, const num::ParameterSet& params, const data::RelationQuery& query,
                       const data::EmbeddingTable& table, bool use_predicate);

/// g(tokens) = avg word vector projected to word_embed_dim.
Var word_query(Tape& tape, const num::ParameterSet& params, const data::Tokens& tokens,
               const data::EmbeddingTable& table);

/// Full encoder pass. `dropout` null means evaluation mode.
EncoderOutput encode(Tape& tape, const num::ParameterSet& params, const EncoderConfig& cfg,
                     const data::VideoFeatures& video, const data::RelationQuery& query,
                     const data::EmbeddingTable& table, double dropout_rate, num::Rng* dropout);

}  // namespace vrg::enc
