#pragma once

#include <string>
#include <vector>

#include "vrg/numerics/autodiff.hpp"
#include "vrg/numerics/parameters.hpp"

namespace vrg::num {

// Gate layout along the 4k axis: input, forget, candidate, output.

struct LstmWeights {
  Var input;      // d × 4k
  Var recurrent;  // k × 4k
  Var bias;       // 4k
  std::size_t hidden = 0;
};

struct LstmState {
  Var h;  // 1 × k
  Var c;  // 1 × k
};

/// Registers `<prefix>.Wx`, `<prefix>.Wh`, `<prefix>.b`. Biases start at zero
/// except the forget gate, which starts at +1.
void register_lstm(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                   std::size_t hidden, Rng& rng);
LstmWeights bind_lstm(Tape& tape, const ParameterSet& params, const std::string& prefix);

/// One cell step: c' = f⊙c + i⊙g, h' = o⊙tanh(c').
LstmState lstm_step(Var x, const LstmState& prev, const LstmWeights& w);
/// Same step with the input projection x·Wx already computed (1 × 4k).
LstmState lstm_step_projected(Var x_proj, const LstmState& prev, const LstmWeights& w);

/// Runs the cell over the rows of `inputs` (T × d) and returns the T hidden states.
std::vector<Var> lstm_sequence(Var inputs, const LstmState& init, const LstmWeights& w);

LstmState zero_state(Tape& tape, std::size_t hidden);

}  // namespace vrg::num
