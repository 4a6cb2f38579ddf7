#include "vrg/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vrg/error.hpp"

namespace vrg::num {

namespace {

Tensor as_matrix(Tensor t) {
  if (t.rank() == 2 || t.empty()) return t;
  const auto r = t.rows();
  const auto c = t.cols();
  return Tensor({r, c}, std::move(t.storage()));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                       b.shape_string());
}

// c += a * b   (a: n×k, b: k×m)
void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// c += a * b^T  (a: n×m, b: k×m, c: n×k)
void gemm_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += ai[j] * bp[j];
      c[i * k + p] += s;
    }
  }
}

// c += a^T * b  (a: n×k, b: n×m, c: k×m)
void gemm_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{as_matrix(std::move(value)), {}, {}, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{as_matrix(std::move(value)), {}, {}, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(const ParameterSet& params, const std::string& name) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return Var{this, it->second.id};
  const Tensor& t = params.get(name);
  Var v = leaf(t);
  param_ids_.emplace(name, ParamRef{v.id, t.shape()});
  return v;
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  bool req = false;
  for (auto p : parents) req = req || nodes_[p].requires_grad;
  nodes_.push_back(Node{as_matrix(std::move(value)), {}, req ? std::move(backward) : BackwardFn{}, req});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this) throw DomainError("backward: variable belongs to another tape");
  if (nodes_[root.id].value.size() != 1) {
    throw DimensionError("backward: root must be scalar, got " + nodes_[root.id].value.shape_string());
  }
  grad(root.id)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

Gradients Tape::parameter_gradients() const {
  Gradients out;
  for (const auto& [name, ref] : param_ids_) {
    const auto& n = nodes_[ref.id];
    if (n.grad.empty()) {
      out.emplace(name, Tensor(ref.shape));
    } else {
      out.emplace(name, Tensor(ref.shape, n.grad.storage()));
    }
  }
  return out;
}


Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto n = av.rows(), k = av.cols(), m = bv.cols();
  if (bv.rows() != k) shape_error("matmul", av, bv);
  Tensor out({n, m});
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), n, k, m);
  const auto ia = a.id, ib = b.id;
  return t.record(std::move(out), {ia, ib}, [ia, ib, n, k, m](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia))
      gemm_nt(g.data().data(), tp.value(ib).data().data(), tp.grad(ia).data().data(), n, m, k);
    if (tp.requires_grad(ib))
      gemm_tn(tp.value(ia).data().data(), g.data().data(), tp.grad(ib).data().data(), n, k, m);
  });
}

Var affine(Var x, Var w, Var b) {
  if (b.value().size() != w.value().cols()) shape_error("affine bias", w.value(), b.value());
  return add_row(matmul(x, w), b);
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("add", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    for (auto id : {ia, ib}) {
      if (!tp.requires_grad(id)) continue;
      auto& d = tp.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  const auto n = av.rows(), c = av.cols();
  if (rv.size() != c) shape_error("add_row", av, rv);
  Tensor out = av;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += rv[j];
  const auto ia = a.id, ir = row.id;
  return a.tape->record(std::move(out), {ia, ir}, [ia, ir, n, c](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia)) {
      auto& d = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (tp.requires_grad(ir)) {
      auto& d = tp.grad(ir);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) d[j] += g[i * c + j];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("mul", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia)) {
      auto& d = tp.grad(ia);
      const auto& o = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * o[i];
    }
    if (tp.requires_grad(ib)) {
      auto& d = tp.grad(ib);
      const auto& o = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * o[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.storage()) v *= factor;
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, factor](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
  });
}

Var mask(Var a, const Tensor& m) {
  const Tensor& av = a.value();
  if (m.size() != av.size()) shape_error("mask", av, m);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, m](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * m[i];
  });
}

Var activate(Var a, Activation kind) {
  Tensor out = a.value();
  switch (kind) {
    case Activation::Tanh:
      for (auto& v : out.storage()) v = std::tanh(v);
      break;
    case Activation::Relu:
      for (auto& v : out.storage()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (auto& v : out.storage()) v = 1.0 / (1.0 + std::exp(-v));
      break;
  }
  const auto ia = a.id;
  const auto io = a.tape->next_id();
  return a.tape->record(std::move(out), {ia}, [ia, io, kind](Tape& tp, const Tensor& g) {
    const auto& y = tp.value(io);
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double dy = 0.0;
      switch (kind) {
        case Activation::Tanh: dy = 1.0 - y[i] * y[i]; break;
        case Activation::Relu: dy = y[i] > 0.0 ? 1.0 : 0.0; break;
        case Activation::Sigmoid: dy = y[i] * (1.0 - y[i]); break;
      }
      d[i] += g[i] * dy;
    }
  });
}

Var softmax_rows(Var a) {
  const Tensor& av = a.value();
  const auto n = av.rows(), c = av.cols();
  if (c == 0) throw DomainError("softmax of empty input");
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = av.data().data() + i * c;
    double* y = out.data().data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  const auto ia = a.id;
  const auto io = a.tape->next_id();
  return a.tape->record(std::move(out), {ia}, [ia, io, n, c](Tape& tp, const Tensor& g) {
    const auto& y = tp.value(io);
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) d[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
    }
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& lv = logits.value();
  if (lv.rows() != 1) throw DimensionError("cross_entropy expects a single row, got " + lv.shape_string());
  const auto c = lv.cols();
  if (target >= c) throw DomainError("cross_entropy target " + std::to_string(target) + " out of range");
  const double mx = *std::max_element(lv.data().begin(), lv.data().end());
  double z = 0.0;
  for (double v : lv.data()) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  Tensor out({1, 1}, log_z - lv[target]);
  const auto il = logits.id;
  return logits.tape->record(std::move(out), {il}, [il, target, log_z, c](Tape& tp, const Tensor& g) {
    const auto& x = tp.value(il);
    auto& d = tp.grad(il);
    for (std::size_t j = 0; j < c; ++j) d[j] += g[0] * std::exp(x[j] - log_z);
    d[target] -= g[0];
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  const auto c = av.cols();
  if (count == 0 || begin + count > av.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) +
                         ") outside " + av.shape_string());
  }
  std::vector<double> data(av.data().begin() + begin * c, av.data().begin() + (begin + count) * c);
  const auto ia = a.id;
  return a.tape->record(Tensor({count, c}, std::move(data)), {ia},
                        [ia, begin, c](Tape& tp, const Tensor& g) {
                          auto& d = tp.grad(ia);
                          for (std::size_t i = 0; i < g.size(); ++i) d[begin * c + i] += g[i];
                        });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  const auto n = av.rows(), c = av.cols();
  if (count == 0 || begin + count > c) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) +
                         ") outside " + av.shape_string());
  }
  Tensor out({n, count});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = av[i * c + begin + j];
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, begin, n, c, count](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < count; ++j) d[i * c + begin + j] += g[i * count + j];
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& rows) {
  const Tensor& av = a.value();
  const auto c = av.cols();
  if (rows.empty()) throw DimensionError("gather_rows with no rows");
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows()) {
      throw DimensionError("gather_rows index " + std::to_string(rows[i]) + " outside " + av.shape_string());
    }
    std::copy_n(av.data().begin() + rows[i] * c, c, out.data().begin() + i * c);
  }
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, rows, c](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) d[rows[i] * c + j] += g[i * c + j];
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows with no rows");
  Tape& t = *rows.front().tape;
  const auto c = rows.front().value().cols();
  std::size_t total = 0;
  std::vector<std::size_t> ids, counts;
  for (const auto& r : rows) {
    const auto& v = r.value();
    if (v.cols() != c) shape_error("stack_rows", rows.front().value(), v);
    ids.push_back(r.id);
    counts.push_back(v.rows());
    total += v.rows();
  }
  Tensor out({total, c});
  std::size_t off = 0;
  for (const auto& r : rows) {
    const auto& v = r.value();
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + off);
    off += v.size();
  }
  return t.record(std::move(out), ids, [ids, counts, c](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto len = counts[k] * c;
      if (tp.requires_grad(ids[k])) {
        auto& d = tp.grad(ids[k]);
        for (std::size_t i = 0; i < len; ++i) d[i] += g[off + i];
      }
      off += len;
    }
  });
}

Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto n = av.rows(), ca = av.cols(), cb = bv.cols();
  if (bv.rows() != n) shape_error("concat_cols", av, bv);
  Tensor out({n, ca + cb});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.data().begin() + i * ca, ca, out.data().begin() + i * (ca + cb));
    std::copy_n(bv.data().begin() + i * cb, cb, out.data().begin() + i * (ca + cb) + ca);
  }
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib, n, ca, cb](Tape& tp, const Tensor& g) {
    const auto w = ca + cb;
    if (tp.requires_grad(ia)) {
      auto& d = tp.grad(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ca; ++j) d[i * ca + j] += g[i * w + j];
    }
    if (tp.requires_grad(ib)) {
      auto& d = tp.grad(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cb; ++j) d[i * cb + j] += g[i * w + ca + j];
    }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& av = a.value();
  if (rows * cols != av.size()) {
    throw DimensionError("reshape " + av.shape_string() + " to [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "]");
  }
  const auto ia = a.id;
  return a.tape->record(Tensor({rows, cols}, av.storage()), {ia}, [ia](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

Var block_weighted_sum(Var w, Var x) {
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  const auto n = wv.rows(), m = wv.cols(), dim = xv.cols();
  if (xv.rows() != n * m) shape_error("block_weighted_sum", wv, xv);
  Tensor out({n, dim});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double a = wv[i * m + j];
      const double* xr = xv.data().data() + (i * m + j) * dim;
      double* o = out.data().data() + i * dim;
      for (std::size_t k = 0; k < dim; ++k) o[k] += a * xr[k];
    }
  const auto iw = w.id, ix = x.id;
  return w.tape->record(std::move(out), {iw, ix}, [iw, ix, n, m, dim](Tape& tp, const Tensor& g) {
    const bool gw = tp.requires_grad(iw), gx = tp.requires_grad(ix);
    const auto& wv = tp.value(iw);
    const auto& xv = tp.value(ix);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double* gi = g.data().data() + i * dim;
        const double* xr = xv.data().data() + (i * m + j) * dim;
        if (gw) {
          double s = 0.0;
          for (std::size_t k = 0; k < dim; ++k) s += gi[k] * xr[k];
          tp.grad(iw)[i * m + j] += s;
        }
        if (gx) {
          double* dx = tp.grad(ix).data().data() + (i * m + j) * dim;
          const double a = wv[i * m + j];
          for (std::size_t k = 0; k < dim; ++k) dx[k] += a * gi[k];
        }
      }
  });
}

Var scale_rows(Var x, Var w) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const auto n = xv.rows(), c = xv.cols();
  if (wv.size() != n) shape_error("scale_rows", xv, wv);
  Tensor out = xv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] *= wv[i];
  const auto ix = x.id, iw = w.id;
  return x.tape->record(std::move(out), {ix, iw}, [ix, iw, n, c](Tape& tp, const Tensor& g) {
    const auto& xv = tp.value(ix);
    const auto& wv = tp.value(iw);
    if (tp.requires_grad(ix)) {
      auto& d = tp.grad(ix);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] += g[i * c + j] * wv[i];
    }
    if (tp.requires_grad(iw)) {
      auto& d = tp.grad(iw);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += g[i * c + j] * xv[i * c + j];
        d[i] += s;
      }
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id;
  return a.tape->record(Tensor({1, 1}, s), {ia}, [ia](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (auto& v : d.storage()) v += g[0];
  });
}

Var add_scalars(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw DimensionError("add_scalars with no terms");
  std::vector<std::size_t> ids;
  double s = 0.0;
  for (const auto& v : scalars) {
    if (v.value().size() != 1) throw DimensionError("add_scalars expects 1x1 terms, got " + v.value().shape_string());
    s += v.value()[0];
    ids.push_back(v.id);
  }
  return scalars.front().tape->record(Tensor({1, 1}, s), ids, [ids](Tape& tp, const Tensor& g) {
    for (auto id : ids)
      if (tp.requires_grad(id)) tp.grad(id)[0] += g[0];
  });
}

Var mean_rows(Var a) {
  const Tensor& av = a.value();
  const auto n = av.rows(), c = av.cols();
  Tensor out({1, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += av[i * c + j];
  for (auto& v : out.storage()) v /= static_cast<double>(n);
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, n, c](Tape& tp, const Tensor& g) {
    auto& d = tp.grad(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) d[i * c + j] += g[j] / static_cast<double>(n);
  });
}

Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout rate must lie in [0, 1)");
  Tensor m({rows, cols}, 1.0);
  if (rate == 0.0) return m;
  std::bernoulli_distribution drop(rate);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& v : m.storage()) v = drop(rng) ? 0.0 : keep;
  return m;
}

}  // namespace vrg::num
