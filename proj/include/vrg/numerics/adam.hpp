#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vrg/numerics/parameters.hpp"

namespace vrg::num {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::uint64_t t = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

/// One bias-corrected Adam step over every parameter in `params`. Parameters
/// missing from `grads` see a zero gradient. A non-finite gradient rejects the
/// whole update (nothing is modified) with NumericError.
void adam_update(ParameterSet& params, const Gradients& grads, AdamState& state);

}  // namespace vrg::num
