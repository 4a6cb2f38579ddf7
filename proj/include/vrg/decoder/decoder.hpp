#pragma once

#include <cstddef>
#include <vector>

#include "vrg/data/relation.hpp"
#include "vrg/data/vocabulary.hpp"
#include "vrg/numerics/autodiff.hpp"
#include "vrg/numerics/parameters.hpp"

namespace vrg::dec {

using num::Tape;
using num::Tensor;
using num::Var;

struct DecoderConfig {
  std::size_t hidden = 512;  // must equal the encoder's k, feat_v seeds h₀
  std::size_t token_embed_dim = 256;
  std::size_t max_decode_length = 16;
};

void register_decoder_parameters(num::ParameterSet& params, const DecoderConfig& cfg, std::size_t vocab_size,
                                 num::Rng& rng);

/// S tokens ++ P tokens (unless dropped) ++ O tokens ++ <end>.
std::vector<std::size_t> target_sequence(const data::RelationQuery& query, const data::Vocabulary& vocab,
                                         bool use_predicate = true);

struct Reconstruction {
  Var loss;                    // 1×1, mean negative log-likelihood per token
  std::vector<Var> logits;     // one 1×V row per target position
};

/// Teacher-forced decoding from h₀ = feat_v, c₀ = 0, first input <start>.
/// `dropout` null means evaluation mode.
Reconstruction reconstruction_loss(Tape& tape, const num::ParameterSet& params, const DecoderConfig& cfg,
                                   Var feat_v, const std::vector<std::size_t>& target, double dropout_rate = 0.0,
                                   num::Rng* dropout = nullptr);

/// Greedy decode for inspection; stops at <end> or max_decode_length.
std::vector<std::size_t> greedy_decode(const num::ParameterSet& params, const DecoderConfig& cfg,
                                       const Tensor& feat_v);

}  // namespace vrg::dec
