#include "vrg/numerics/adam.hpp"

#include <cmath>

#include "vrg/error.hpp"

namespace vrg::num {

void adam_update(ParameterSet& params, const Gradients& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ConfigError("gradient for unregistered parameter " + name);
    if (!g.same_shape(params.get(name))) {
      throw DimensionError("gradient shape " + g.shape_string() + " does not match parameter " + name + " " +
                           params.get(name).shape_string());
    }
    if (!g.all_finite()) throw NumericError("non-finite gradient for " + name + "; update rejected");
  }

  const auto& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);

  for (const auto& name : params.names()) {
    Tensor& theta = params.get(name);
    auto mit = state.m.try_emplace(name, Tensor::zeros_like(theta)).first;
    auto vit = state.v.try_emplace(name, Tensor::zeros_like(theta)).first;
    auto git = grads.find(name);
    auto& m = mit->second.storage();
    auto& v = vit->second.storage();
    auto& p = theta.storage();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = git == grads.end() ? 0.0 : git->second[i];
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
      // Zero-gradient coordinates only decay their moments.
      if (g == 0.0) continue;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
  }
}

}  // namespace vrg::num
