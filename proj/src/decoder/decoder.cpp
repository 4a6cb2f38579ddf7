#include "vrg/decoder/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "vrg/error.hpp"
#include "vrg/numerics/lstm.hpp"

namespace vrg::dec {

void register_decoder_parameters(num::ParameterSet& params, const DecoderConfig& cfg, std::size_t vocab_size,
                                 num::Rng& rng) {
  if (cfg.hidden == 0 || cfg.token_embed_dim == 0) throw ConfigError("decoder dimensions must be positive");
  if (vocab_size <= data::Vocabulary::kPad) throw ConfigError("decoder vocabulary lacks reserved tokens");
  params.add("dec.embed", num::uniform_init({vocab_size, cfg.token_embed_dim}, cfg.token_embed_dim, rng));
  num::register_lstm(params, "dec.lstm", cfg.token_embed_dim, cfg.hidden, rng);
  params.add("dec.out.W", num::uniform_init({cfg.hidden, vocab_size}, cfg.hidden, rng));
  params.add("dec.out.b", Tensor({vocab_size}));
}

std::vector<std::size_t> target_sequence(const data::RelationQuery& query, const data::Vocabulary& vocab,
                                         bool use_predicate) {
  std::vector<std::size_t> out;
  for (const auto& t : query.subject) out.push_back(vocab.index(t));
  if (use_predicate)
    for (const auto& t : query.predicate) out.push_back(vocab.index(t));
  for (const auto& t : query.object) out.push_back(vocab.index(t));
  out.push_back(data::Vocabulary::kEnd);
  return out;
}

Reconstruction reconstruction_loss(Tape& tape, const num::ParameterSet& params, const DecoderConfig& cfg,
                                   Var feat_v, const std::vector<std::size_t>& target, double dropout_rate,
                                   num::Rng* dropout) {
  if (target.empty()) throw DomainError("reconstruction_loss: empty target");
  if (feat_v.cols() != cfg.hidden || feat_v.rows() != 1) {
    throw DimensionError("reconstruction_loss: feat_v " + feat_v.value().shape_string() +
                         " does not match decoder hidden size " + std::to_string(cfg.hidden));
  }
  Var embed = tape.parameter(params, "dec.embed");
  auto lstm = num::bind_lstm(tape, params, "dec.lstm");
  Var w_out = tape.parameter(params, "dec.out.W");
  Var b_out = tape.parameter(params, "dec.out.b");

  // Inputs are <start>, R_1, ..., R_{n-1}; outputs predict R_1..R_n.
  std::vector<std::size_t> inputs{data::Vocabulary::kStart};
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  Var x = num::gather_rows(embed, inputs);
  if (dropout != nullptr && dropout_rate > 0.0) {
    x = num::mask(x, num::dropout_mask(x.rows(), x.cols(), dropout_rate, *dropout));
  }

  num::LstmState state{feat_v, tape.constant(Tensor({1, cfg.hidden}))};
  Var projected = num::matmul(x, lstm.input);
  Reconstruction rec;
  std::vector<Var> terms;
  for (std::size_t t = 0; t < target.size(); ++t) {
    state = num::lstm_step_projected(num::slice_rows(projected, t, 1), state, lstm);
    Var logits = num::affine(state.h, w_out, b_out);
    rec.logits.push_back(logits);
    terms.push_back(num::cross_entropy(logits, target[t]));
  }
  rec.loss = num::scale(num::add_scalars(terms), 1.0 / static_cast<double>(target.size()));
  if (!std::isfinite(rec.loss.value()[0])) throw NumericError("reconstruction loss is not finite");
  return rec;
}

std::vector<std::size_t> greedy_decode(const num::ParameterSet& params, const DecoderConfig& cfg,
                                       const Tensor& feat_v) {
  Tape tape;
  Var embed = tape.parameter(params, "dec.embed");
  auto lstm = num::bind_lstm(tape, params, "dec.lstm");
  Var w_out = tape.parameter(params, "dec.out.W");
  Var b_out = tape.parameter(params, "dec.out.b");
  num::LstmState state{tape.constant(feat_v), tape.constant(Tensor({1, cfg.hidden}))};
  std::vector<std::size_t> out;
  std::size_t token = data::Vocabulary::kStart;
  for (std::size_t t = 0; t < cfg.max_decode_length; ++t) {
    state = num::lstm_step(num::gather_rows(embed, {token}), state, lstm);
    const auto& logits = num::affine(state.h, w_out, b_out).value();
    const auto best = std::max_element(logits.data().begin(), logits.data().end());
    token = static_cast<std::size_t>(best - logits.data().begin());
    if (token == data::Vocabulary::kEnd) break;
    out.push_back(token);
  }
  return out;
}

}  // namespace vrg::dec
