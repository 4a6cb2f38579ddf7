#include "vrg/numerics/parameters.hpp"

#include <cmath>

#include "vrg/error.hpp"

namespace vrg::num {

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  // FNV-1a over the tag, then a splitmix64 finalizer mixing in the base seed.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL + h;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor& ParameterSet::add(const std::string& name, Tensor init) {
  if (values_.count(name)) throw ConfigError("parameter registered twice: " + name);
  order_.push_back(name);
  return values_.emplace(name, std::move(init)).first->second;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : values_) n += t.size();
  return n;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
  for (const auto& [name, grad] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      Tensor copy = grad;
      if (scale != 1.0)
        for (auto& v : copy.storage()) v *= scale;
      into.emplace(name, std::move(copy));
      continue;
    }
    if (!it->second.same_shape(grad)) {
      throw DimensionError("gradient shape mismatch for " + name + ": " + it->second.shape_string() +
                           " vs " + grad.shape_string());
    }
    auto& dst = it->second.storage();
    const auto& src = grad.storage();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

void scale(Gradients& g, double factor) {
  for (auto& [_, t] : g)
    for (auto& v : t.storage()) v *= factor;
}

double global_norm(const Gradients& g) {
  double sq = 0.0;
  for (const auto& [_, t] : g)
    for (double v : t.storage()) sq += v * v;
  return std::sqrt(sq);
}

double clip_global_norm(Gradients& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm && norm > 0.0) scale(g, max_norm / norm);
  return norm;
}

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

}  // namespace vrg::num
