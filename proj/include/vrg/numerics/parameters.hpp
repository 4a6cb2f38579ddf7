#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrg/numerics/tensor.hpp"

namespace vrg::num {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a component tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// Named, ordered collection of trainable tensors.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  /// Names in registration order.
  const std::vector<std::string>& names() const { return order_; }
  std::size_t count() const { return order_.size(); }
  std::size_t total_size() const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> values_;
};

/// Parameter name -> gradient of identical shape.
using Gradients = std::map<std::string, Tensor>;

void accumulate(Gradients& into, const Gradients& g, double scale = 1.0);
void scale(Gradients& g, double factor);
double global_norm(const Gradients& g);
/// Rescales so the global L2 norm is at most max_norm. Returns the norm before clipping.
double clip_global_norm(Gradients& g, double max_norm);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

}  // namespace vrg::num
