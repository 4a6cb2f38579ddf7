#include "vrg/numerics/lstm.hpp"

#include "vrg/error.hpp"

namespace vrg::num {

void register_lstm(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                   std::size_t hidden, Rng& rng) {
  params.add(prefix + ".Wx", uniform_init({input_dim, 4 * hidden}, input_dim, rng));
  params.add(prefix + ".Wh", uniform_init({hidden, 4 * hidden}, hidden, rng));
  Tensor b({4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  params.add(prefix + ".b", std::move(b));
}

LstmWeights bind_lstm(Tape& tape, const ParameterSet& params, const std::string& prefix) {
  LstmWeights w;
  w.input = tape.parameter(params, prefix + ".Wx");
  w.recurrent = tape.parameter(params, prefix + ".Wh");
  w.bias = tape.parameter(params, prefix + ".b");
  w.hidden = w.recurrent.rows();
  if (w.input.cols() != 4 * w.hidden || w.recurrent.cols() != 4 * w.hidden ||
      w.bias.value().size() != 4 * w.hidden) {
    throw DimensionError("inconsistent LSTM parameter shapes under " + prefix);
  }
  return w;
}

LstmState lstm_step_projected(Var x_proj, const LstmState& prev, const LstmWeights& w) {
  const auto k = w.hidden;
  if (x_proj.cols() != 4 * k || prev.h.cols() != k || prev.c.cols() != k) {
    throw DimensionError("lstm_step: hidden size " + std::to_string(k) + " does not match state " +
                         prev.h.value().shape_string() + " / input " + x_proj.value().shape_string());
  }
  Var gates = add_row(add(x_proj, matmul(prev.h, w.recurrent)), w.bias);
  Var i = activate(slice_cols(gates, 0, k), Activation::Sigmoid);
  Var f = activate(slice_cols(gates, k, k), Activation::Sigmoid);
  Var g = activate(slice_cols(gates, 2 * k, k), Activation::Tanh);
  Var o = activate(slice_cols(gates, 3 * k, k), Activation::Sigmoid);
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, activate(c, Activation::Tanh));
  return {h, c};
}

LstmState lstm_step(Var x, const LstmState& prev, const LstmWeights& w) {
  if (x.cols() != w.input.rows()) {
    throw DimensionError("lstm_step: input " + x.value().shape_string() + " does not match Wx " +
                         w.input.value().shape_string());
  }
  return lstm_step_projected(matmul(x, w.input), prev, w);
}

std::vector<Var> lstm_sequence(Var inputs, const LstmState& init, const LstmWeights& w) {
  Var projected = matmul(inputs, w.input);
  std::vector<Var> hs;
  hs.reserve(inputs.rows());
  LstmState s = init;
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    s = lstm_step_projected(slice_rows(projected, t, 1), s, w);
    hs.push_back(s.h);
  }
  return hs;
}

LstmState zero_state(Tape& tape, std::size_t hidden) {
  return {tape.constant(Tensor({1, hidden})), tape.constant(Tensor({1, hidden}))};
}

}  // namespace vrg::num
