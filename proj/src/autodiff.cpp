// Copyright 2026 The mimlm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mimlm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mimlm/error.hpp"

namespace mimlm::ad {
namespace {

Graph& same_graph(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.graph() != b.graph()) {
    throw Error("operands belong to different graphs");
  }
  return *a.graph();
}

Graph& graph_of(Var x) {
  if (!x.valid()) throw Error("operation on an empty Var");
  return *x.graph();
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(t.shape()));
  }
}

enum class Broadcast { kNone, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  if (b.size() == 1) return Broadcast::kRightScalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

// Shared driver for add/sub/mul.  fwd(x, y) computes the value; dfa/dfb give
// the local partials at (x, y).
template <typename Fwd, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, Fwd fwd, DA dfa, DB dfb) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast kind = broadcast_kind(av, bv, op);
  const Tensor& big = kind == Broadcast::kLeftScalar ? bv : av;
  Tensor out(big.shape());
  const std::size_t n = out.size();
  auto ai = [&](std::size_t i) { return kind == Broadcast::kLeftScalar ? 0 : i; };
  auto bi = [&](std::size_t i) { return kind == Broadcast::kRightScalar ? 0 : i; };
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[ai(i)], bv[bi(i)]);
  std::size_t ia = a.id(), ib = b.id();
  return g.record(op, std::move(out), {a, b},
                  [ia, ib, kind, n, dfa, dfb](Graph& g, std::size_t self) {
                    auto go = g.grad_view(self);
                    const Tensor& x = g.value(ia);
                    const Tensor& y = g.value(ib);
                    auto xi = [&](std::size_t i) {
                      return kind == Broadcast::kLeftScalar ? 0 : i;
                    };
                    auto yi = [&](std::size_t i) {
                      return kind == Broadcast::kRightScalar ? 0 : i;
                    };
                    if (g.needs_grad(ia)) {
                      auto gx = g.grad(ia);
                      for (std::size_t i = 0; i < n; ++i)
                        gx[xi(i)] += go[i] * dfa(x[xi(i)], y[yi(i)]);
                    }
                    if (g.needs_grad(ib)) {
                      auto gy = g.grad(ib);
                      for (std::size_t i = 0; i < n; ++i)
                        gy[yi(i)] += go[i] * dfb(x[xi(i)], y[yi(i)]);
                    }
                  });
}

// Unary elementwise op whose derivative is expressed through the input x and
// output y.
template <typename Fwd, typename D>
Var unary(const char* op, Var x, Fwd fwd, D deriv) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  std::size_t ix = x.id();
  return g.record(op, std::move(out), {x},
                  [ix, deriv](Graph& g, std::size_t self) {
                    if (!g.needs_grad(ix)) return;
                    auto go = g.grad_view(self);
                    const Tensor& xin = g.value(ix);
                    const Tensor& y = g.value(self);
                    auto gx = g.grad(ix);
                    for (std::size_t i = 0; i < gx.size(); ++i)
                      gx[i] += go[i] * deriv(xin[i], y[i]);
                  });
}

}  // namespace

const Tensor& Var::value() const {
  if (!graph_) throw Error("value() of an empty Var");
  return graph_->value(id_);
}

Real Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) {
    throw DimensionError("item() needs a single element, got " +
                         shape_string(v.shape()));
  }
  return v[0];
}

std::span<const Real> Var::grad() const { return graph_->grad_view(id_); }

Graph::Graph(bool track_gradients) : track_(track_gradients) {
  nodes_.reserve(256);
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.own;
}

std::span<Real> Graph::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), Real(0));
  return n.grad;
}

Var Graph::constant(Tensor value) {
  Node n;
  n.own = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::input(const Tensor& external) {
  Node n;
  n.external = &external;
  n.op = "input";
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor& external) {
  Node n;
  n.external = &external;
  n.op = "parameter";
  if (track_) {
    n.param = &external;
    n.needs_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(const char* op, Tensor value,
                  std::initializer_list<Var> inputs, BackwardFn fn) {
  if (nan_guard_) {
    for (Real v : value.data()) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string("non-finite value produced by op '") +
                           op + "' (node " + std::to_string(nodes_.size()) +
                           ")");
      }
    }
  }
  Node n;
  n.own = std::move(value);
  n.op = op;
  if (track_) {
    for (Var in : inputs) {
      if (in.graph() != this) throw Error("input from a foreign graph");
      n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
    }
    if (n.needs_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var root) {
  if (!track_) throw Error("backward() on a graph that does not track gradients");
  if (root.graph() != this) throw Error("backward() root from a foreign graph");
  if (value(root.id()).size() != 1) {
    throw DimensionError("backward() root must be a scalar, got " +
                         shape_string(value(root.id()).shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  grad(root.id())[0] = 1;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto pg = n.param->mutable_grad();
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
}

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    Real* orow = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = av[i * k + p];
      if (aip == 0) continue;
      const Real* brow = &bv[p * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  std::size_t ia = a.id(), ib = b.id();
  return g.record("matmul", std::move(out), {a, b},
                  [ia, ib, m, k, n](Graph& g, std::size_t self) {
                    auto go = g.grad_view(self);
                    const Tensor& x = g.value(ia);
                    const Tensor& y = g.value(ib);
                    if (g.needs_grad(ia)) {
                      // dA = G B^T
                      auto gx = g.grad(ia);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          Real acc = 0;
                          const Real* grow = &go[i * n];
                          const Real* brow = &y[p * n];
                          for (std::size_t j = 0; j < n; ++j)
                            acc += grow[j] * brow[j];
                          gx[i * k + p] += acc;
                        }
                    }
                    if (g.needs_grad(ib)) {
                      // dB = A^T G
                      auto gy = g.grad(ib);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          const Real aip = x[i * k + p];
                          if (aip == 0) continue;
                          const Real* grow = &go[i * n];
                          Real* gyrow = &gy[p * n];
                          for (std::size_t j = 0; j < n; ++j)
                            gyrow[j] += aip * grow[j];
                        }
                    }
                  });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](Real x, Real y) { return x + y; },
      [](Real, Real) { return Real(1); }, [](Real, Real) { return Real(1); });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](Real x, Real y) { return x - y; },
      [](Real, Real) { return Real(1); }, [](Real, Real) { return Real(-1); });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](Real x, Real y) { return x * y; },
      [](Real, Real y) { return y; }, [](Real x, Real) { return x; });
}

Var neg(Var x) {
  return unary(
      "neg", x, [](Real v) { return -v; }, [](Real, Real) { return Real(-1); });
}

Var scale(Var x, Real c) {
  return unary(
      "scale", x, [c](Real v) { return c * v; },
      [c](Real, Real) { return c; });
}

Var add_scalar(Var x, Real c) {
  return unary(
      "add_scalar", x, [c](Real v) { return v + c; },
      [](Real, Real) { return Real(1); });
}

Var sigmoid(Var x) {
  return unary(
      "sigmoid", x,
      [](Real v) {
        // split by sign so exp never overflows
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

Var softplus(Var x) {
  return unary(
      "softplus", x,
      [](Real v) { return std::max(v, Real(0)) + std::log1p(std::exp(-std::abs(v))); },
      [](Real v, Real) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        Real e = std::exp(v);
        return e / (Real(1) + e);
      });
}

Var tanh(Var x) {
  return unary(
      "tanh", x, [](Real v) { return std::tanh(v); },
      [](Real, Real y) { return Real(1) - y * y; });
}

Var exp(Var x) {
  return unary(
      "exp", x, [](Real v) { return std::exp(v); },
      [](Real, Real y) { return y; });
}

Var log(Var x) {
  for (Real v : x.value().data()) {
    if (!(v > 0)) {
      throw DomainError("log of non-positive value " + std::to_string(v));
    }
  }
  return unary(
      "log", x, [](Real v) { return std::log(v); },
      [](Real v, Real) { return Real(1) / v; });
}

Var square(Var x) {
  return unary(
      "square", x, [](Real v) { return v * v; },
      [](Real v, Real) { return Real(2) * v; });
}

Var sum(Var x) {
  Graph& g = graph_of(x);
  Real acc = 0;
  for (Real v : x.value().data()) acc += v;
  std::size_t ix = x.id();
  return g.record("sum", Tensor::scalar(acc), {x},
                  [ix](Graph& g, std::size_t self) {
                    if (!g.needs_grad(ix)) return;
                    Real go = g.grad_view(self)[0];
                    for (Real& v : g.grad(ix)) v += go;
                  });
}

Var mean(Var x) {
  return scale(sum(x), Real(1) / static_cast<Real>(x.size()));
}

Var row_sum(Var x) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  require_rank2(xv, "row_sum");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    Real acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += xv[i * n + j];
    out[i] = acc;
  }
  std::size_t ix = x.id();
  return g.record("row_sum", std::move(out), {x},
                  [ix, m, n](Graph& g, std::size_t self) {
                    if (!g.needs_grad(ix)) return;
                    auto go = g.grad_view(self);
                    auto gx = g.grad(ix);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j)
                        gx[i * n + j] += go[i];
                  });
}

Var add_row(Var x, Var bias) {
  Graph& g = same_graph(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_rank2(xv, "add_row");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (bv.size() != n) {
    throw DimensionError("add_row: bias " + shape_string(bv.shape()) +
                         " does not match rows of " + shape_string(xv.shape()));
  }
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
  std::size_t ix = x.id(), ib = bias.id();
  return g.record("add_row", std::move(out), {x, bias},
                  [ix, ib, m, n](Graph& g, std::size_t self) {
                    auto go = g.grad_view(self);
                    if (g.needs_grad(ix)) {
                      auto gx = g.grad(ix);
                      for (std::size_t i = 0; i < m * n; ++i) gx[i] += go[i];
                    }
                    if (g.needs_grad(ib)) {
                      auto gb = g.grad(ib);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j)
                          gb[j] += go[i * n + j];
                    }
                  });
}

Var linear(Var x, Var weight, Var bias) {
  return add_row(matmul(x, weight), bias);
}

Var concat_cols(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "concat_cols");
  require_rank2(bv, "concat_cols");
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row counts differ, " +
                         shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::size_t m = av.rows(), p = av.cols(), q = bv.cols();
  Tensor out({m, p + q});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(&av[i * p], p, &out[i * (p + q)]);
    std::copy_n(&bv[i * q], q, &out[i * (p + q) + p]);
  }
  std::size_t ia = a.id(), ib = b.id();
  return g.record("concat_cols", std::move(out), {a, b},
                  [ia, ib, m, p, q](Graph& g, std::size_t self) {
                    auto go = g.grad_view(self);
                    if (g.needs_grad(ia)) {
                      auto ga = g.grad(ia);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < p; ++j)
                          ga[i * p + j] += go[i * (p + q) + j];
                    }
                    if (g.needs_grad(ib)) {
                      auto gb = g.grad(ib);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < q; ++j)
                          gb[i * q + j] += go[i * (p + q) + p + j];
                    }
                  });
}

Var choose_rows(std::span<const char> take_first, Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "choose_rows");
  if (av.shape() != bv.shape() || take_first.size() != av.rows()) {
    throw DimensionError("choose_rows: shapes " + shape_string(av.shape()) +
                         ", " + shape_string(bv.shape()) + " with " +
                         std::to_string(take_first.size()) + " selectors");
  }
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor& src = take_first[i] ? av : bv;
    std::copy_n(&src[i * n], n, &out[i * n]);
  }
  std::vector<char> mask(take_first.begin(), take_first.end());
  std::size_t ia = a.id(), ib = b.id();
  return g.record("choose_rows", std::move(out), {a, b},
                  [ia, ib, m, n, mask = std::move(mask)](Graph& g,
                                                         std::size_t self) {
                    auto go = g.grad_view(self);
                    for (std::size_t i = 0; i < m; ++i) {
                      std::size_t target = mask[i] ? ia : ib;
                      if (!g.needs_grad(target)) continue;
                      auto gt = g.grad(target);
                      for (std::size_t j = 0; j < n; ++j)
                        gt[i * n + j] += go[i * n + j];
                    }
                  });
}

Var embedding_lookup(Var table, std::span<const std::int32_t> ids) {
  Graph& g = graph_of(table);
  const Tensor& tv = table.value();
  require_rank2(tv, "embedding_lookup");
  const std::size_t vocab = tv.rows(), e = tv.cols();
  if (ids.empty()) throw DimensionError("embedding_lookup: no ids");
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError("embedding_lookup: id " + std::to_string(id) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
  }
  Tensor out({ids.size(), e});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(&tv[static_cast<std::size_t>(ids[i]) * e], e, &out[i * e]);
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  std::size_t it = table.id();
  return g.record("embedding_lookup", std::move(out), {table},
                  [it, e, rows = std::move(rows)](Graph& g, std::size_t self) {
                    if (!g.needs_grad(it)) return;
                    auto go = g.grad_view(self);
                    auto gt = g.grad(it);
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      Real* dst = &gt[static_cast<std::size_t>(rows[i]) * e];
                      for (std::size_t j = 0; j < e; ++j) dst[j] += go[i * e + j];
                    }
                  });
}

Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " +
                      std::to_string(rate));
  }
  if (mode == Mode::kEval || rate == 0.0) return x;
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  std::vector<Real> factor(xv.size());
  for (Real& f : factor) f = rng.uniform() < rate ? Real(0) : keep_scale;
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor[i];
  std::size_t ix = x.id();
  return g.record("dropout", std::move(out), {x},
                  [ix, factor = std::move(factor)](Graph& g, std::size_t self) {
                    if (!g.needs_grad(ix)) return;
                    auto go = g.grad_view(self);
                    auto gx = g.grad(ix);
                    for (std::size_t i = 0; i < gx.size(); ++i)
                      gx[i] += go[i] * factor[i];
                  });
}

Var log_softmax(Var x) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const Real* row = &xv[i * n];
    Real hi = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(row[j])) {
        throw NumericError("log_softmax: non-finite logit");
      }
      hi = std::max(hi, row[j]);
    }
    Real acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(row[j] - hi);
    const Real lse = hi + std::log(acc);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
  }
  std::size_t ix = x.id();
  return g.record("log_softmax", std::move(out), {x},
                  [ix, m, n](Graph& g, std::size_t self) {
                    if (!g.needs_grad(ix)) return;
                    auto go = g.grad_view(self);
                    const Tensor& y = g.value(self);
                    auto gx = g.grad(ix);
                    for (std::size_t i = 0; i < m; ++i) {
                      Real gsum = 0;
                      for (std::size_t j = 0; j < n; ++j) gsum += go[i * n + j];
                      for (std::size_t j = 0; j < n; ++j)
                        gx[i * n + j] +=
                            go[i * n + j] - std::exp(y[i * n + j]) * gsum;
                    }
                  });
}

Var pick(Var x, std::span<const std::int32_t> idx) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  require_rank2(xv, "pick");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (idx.size() != m) {
    throw DimensionError("pick: " + std::to_string(idx.size()) +
                         " indices for " + shape_string(xv.shape()));
  }
  Tensor out({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= n) {
      throw IndexError("pick: column " + std::to_string(idx[i]) +
                       " outside " + std::to_string(n));
    }
    out[i] = xv[i * n + static_cast<std::size_t>(idx[i])];
  }
  std::vector<std::int32_t> cols(idx.begin(), idx.end());
  std::size_t ix = x.id();
  return g.record("pick", std::move(out), {x},
                  [ix, n, cols = std::move(cols)](Graph& g, std::size_t self) {
                    if (!g.needs_grad(ix)) return;
                    auto go = g.grad_view(self);
                    auto gx = g.grad(ix);
                    for (std::size_t i = 0; i < cols.size(); ++i)
                      gx[i * n + static_cast<std::size_t>(cols[i])] += go[i];
                  });
}

}  // namespace mimlm::ad
