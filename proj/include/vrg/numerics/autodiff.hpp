#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrg/numerics/parameters.hpp"
#include "vrg/numerics/tensor.hpp"

namespace vrg::num {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Single-use reverse-mode computation record. Build one per forward pass,
/// call backward() once on a scalar, then read gradients.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Var constant(Tensor value);
  /// A leaf whose gradient is tracked (inputs under test, not parameters).
  Var leaf(Tensor value);
  /// Leaf bound to a named parameter. Repeated calls return the same node.
  Var parameter(const ParameterSet& params, const std::string& name);

  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer for a node, zero-initialized on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  void backward(Var root);
  Gradients parameter_gradients() const;
  std::size_t size() const { return nodes_.size(); }
  /// Id the next recorded node will receive; lets a backward closure read its own output.
  std::size_t next_id() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  struct ParamRef {
    std::size_t id;
    std::vector<std::size_t> shape;
  };
  std::unordered_map<std::string, ParamRef> param_ids_;
};

enum class Activation { Tanh, Relu, Sigmoid };

// All operations produce rank-2 results; rank-1 inputs are read as 1×n rows.

Var matmul(Var a, Var b);
/// y = xW + b with b broadcast over rows.
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
/// Adds a 1×c row to every row of an n×c matrix.
Var add_row(Var a, Var row);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Elementwise product with a constant mask (used for dropout).
Var mask(Var a, const Tensor& m);
Var activate(Var a, Activation kind);
/// Row-wise softmax with max subtraction.
Var softmax_rows(Var a);
/// -log softmax(logits)[target] for a 1×V row. Returns 1×1.
Var cross_entropy(Var logits, std::size_t target);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var gather_rows(Var a, const std::vector<std::size_t>& rows);
Var stack_rows(const std::vector<Var>& rows);
Var concat_cols(Var a, Var b);
Var reshape(Var a, std::size_t rows, std::size_t cols);
/// out[i] = sum_j w[i,j] * x[i*M + j] for w: N×M and x: (N·M)×d.
Var block_weighted_sum(Var w, Var x);
/// out[i,:] = w[i] * x[i,:] for x: n×c and w holding n entries.
Var scale_rows(Var x, Var w);
/// Sum of all entries, 1×1.
Var sum(Var a);
/// Sum of a list of 1×1 scalars.
Var add_scalars(const std::vector<Var>& scalars);
/// Column-wise mean over rows, 1×c.
Var mean_rows(Var a);

/// Inverted-dropout keep mask: entries are 0 with probability `rate`, else 1/(1-rate).
Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

}  // namespace vrg::num
