#include <algorithm>
#include <cmath>

#include "ctxslu/diffcore.hpp"
#include "ctxslu/errors.hpp"
#include "ctxslu/kernels.hpp"

namespace ctxslu::diff {
namespace {

using Index = std::uint32_t;

Graph& graph_of(Var a) {
  if (!a.valid()) throw StateError("operation on an empty Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw StateError("operands belong to different computation records");
  return g;
}

[[noreturn]] void mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                       shape_string(b));
}

bool is_matrix(const Shape& s) { return s.size() == 2; }
bool is_vector(const Shape& s) { return s.size() == 1; }

void require_vector(std::string_view op, const Shape& s) {
  if (!is_vector(s)) throw DimensionError(std::string(op) + ": expected a vector, got " + shape_string(s));
}

void require_matrix(std::string_view op, const Shape& s) {
  if (!is_matrix(s)) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(s));
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : v) x /= total;
}

void softmax_backward(std::span<const double> y, std::span<const double> dy, std::span<double> dx) {
  double inner = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) inner += y[i] * dy[i];
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - inner);
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kParam: return "param";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kMatmulNT: return "matmul_nt";
    case OpKind::kMatvec: return "matvec";
    case OpKind::kVecmat: return "vecmat";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kConcat: return "concat";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kStackRows: return "stack_rows";
    case OpKind::kRow: return "row";
    case OpKind::kSlice: return "slice";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kSum: return "sum";
    case OpKind::kDot: return "dot";
    case OpKind::kEmbedding: return "embedding_lookup";
    case OpKind::kLstmStep: return "lstm_step";
    case OpKind::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (!is_matrix(sa) || !is_matrix(sb) || sa[1] != sb[0]) mismatch("matmul", sa, sb);
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      kernels::axpy(av[i * k + p], bv.data() + p * n, out.data() + i * n, n);
    }
  }
  const Index ia = a.index(), ib = b.index();
  return g.push(OpKind::kMatmul, {m, n}, std::move(out), {ia, ib},
                [ia, ib, m, k, n](Graph& g, Index self) {
                  auto dc = g.grad_view(self);
                  auto av = g.value(ia);
                  auto bv = g.value(ib);
                  if (g.requires_grad(ia)) {
                    auto da = g.grad(ia);
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        da[i * k + p] += kernels::dot(dc.data() + i * n, bv.data() + p * n, n);
                      }
                    }
                  }
                  if (g.requires_grad(ib)) {
                    auto db = g.grad(ib);
                    for (std::size_t i = 0; i < m; ++i) {
                      kernels::ger_acc(db.data(), k, n, av.data() + i * k, dc.data() + i * n);
                    }
                  }
                });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (!is_matrix(sa) || !is_matrix(sb) || sa[1] != sb[1]) mismatch("matmul_nt", sa, sb);
  const std::size_t m = sa[0], k = sa[1], n = sb[0];
  std::vector<double> out(m * n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) kernels::gemv(bv.data(), n, k, av.data() + i * k, out.data() + i * n);
  const Index ia = a.index(), ib = b.index();
  return g.push(OpKind::kMatmulNT, {m, n}, std::move(out), {ia, ib},
                [ia, ib, m, k, n](Graph& g, Index self) {
                  auto dc = g.grad_view(self);
                  auto av = g.value(ia);
                  auto bv = g.value(ib);
                  if (g.requires_grad(ia)) {
                    auto da = g.grad(ia);
                    for (std::size_t i = 0; i < m; ++i) {
                      kernels::gemv_t_acc(bv.data(), n, k, dc.data() + i * n, da.data() + i * k);
                    }
                  }
                  if (g.requires_grad(ib)) {
                    auto db = g.grad(ib);
                    for (std::size_t i = 0; i < m; ++i) {
                      kernels::ger_acc(db.data(), n, k, dc.data() + i * n, av.data() + i * k);
                    }
                  }
                });
}

Var matvec(Var w, Var x) {
  Graph& g = graph_of(w, x);
  const Shape& sw = w.shape();
  const Shape& sx = x.shape();
  if (!is_matrix(sw) || !is_vector(sx) || sw[1] != sx[0]) mismatch("matvec", sw, sx);
  const std::size_t m = sw[0], n = sw[1];
  std::vector<double> out(m);
  kernels::gemv(w.values().data(), m, n, x.values().data(), out.data());
  const Index iw = w.index(), ix = x.index();
  return g.push(OpKind::kMatvec, {m}, std::move(out), {iw, ix}, [iw, ix, m, n](Graph& g, Index self) {
    auto dy = g.grad_view(self);
    if (g.requires_grad(iw)) kernels::ger_acc(g.grad(iw).data(), m, n, dy.data(), g.value(ix).data());
    if (g.requires_grad(ix)) kernels::gemv_t_acc(g.value(iw).data(), m, n, dy.data(), g.grad(ix).data());
  });
}

Var vecmat(Var x, Var w) {
  Graph& g = graph_of(x, w);
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (!is_matrix(sw) || !is_vector(sx) || sw[0] != sx[0]) mismatch("vecmat", sx, sw);
  const std::size_t m = sw[0], n = sw[1];
  std::vector<double> out(n, 0.0);
  kernels::gemv_t_acc(w.values().data(), m, n, x.values().data(), out.data());
  const Index ix = x.index(), iw = w.index();
  return g.push(OpKind::kVecmat, {n}, std::move(out), {ix, iw}, [ix, iw, m, n](Graph& g, Index self) {
    auto dy = g.grad_view(self);
    if (g.requires_grad(ix)) {
      auto dx = g.grad(ix);
      auto wv = g.value(iw);
      for (std::size_t r = 0; r < m; ++r) dx[r] += kernels::dot(wv.data() + r * n, dy.data(), n);
    }
    if (g.requires_grad(iw)) kernels::ger_acc(g.grad(iw).data(), m, n, g.value(ix).data(), dy.data());
  });
}

namespace {

template <typename Fwd, typename Bwd>
Var binary_elementwise(OpKind kind, std::string_view name, Var a, Var b, Fwd fwd, Bwd bwd) {
  Graph& g = graph_of(a, b);
  if (a.shape() != b.shape()) mismatch(name, a.shape(), b.shape());
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  const Index ia = a.index(), ib = b.index();
  return g.push(kind, a.shape(), std::move(out), {ia, ib}, [ia, ib, bwd](Graph& g, Index self) {
    bwd(g, self, ia, ib);
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(OpKind::kAdd, "add", a, b, [](double x, double y) { return x + y; },
                            [](Graph& g, Index self, Index ia, Index ib) {
                              auto dy = g.grad_view(self);
                              if (g.requires_grad(ia)) kernels::axpy(1.0, dy.data(), g.grad(ia).data(), dy.size());
                              if (g.requires_grad(ib)) kernels::axpy(1.0, dy.data(), g.grad(ib).data(), dy.size());
                            });
}

Var sub(Var a, Var b) {
  return binary_elementwise(OpKind::kSub, "sub", a, b, [](double x, double y) { return x - y; },
                            [](Graph& g, Index self, Index ia, Index ib) {
                              auto dy = g.grad_view(self);
                              if (g.requires_grad(ia)) kernels::axpy(1.0, dy.data(), g.grad(ia).data(), dy.size());
                              if (g.requires_grad(ib)) kernels::axpy(-1.0, dy.data(), g.grad(ib).data(), dy.size());
                            });
}

Var mul(Var a, Var b) {
  return binary_elementwise(OpKind::kMul, "mul", a, b, [](double x, double y) { return x * y; },
                            [](Graph& g, Index self, Index ia, Index ib) {
                              auto dy = g.grad_view(self);
                              auto av = g.value(ia);
                              auto bv = g.value(ib);
                              if (g.requires_grad(ia)) {
                                auto da = g.grad(ia);
                                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[i];
                              }
                              if (g.requires_grad(ib)) {
                                auto db = g.grad(ib);
                                for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av[i];
                              }
                            });
}

Var scale(Var a, double factor) {
  Graph& g = graph_of(a);
  auto av = a.values();
  std::vector<double> out(av.begin(), av.end());
  for (double& v : out) v *= factor;
  const Index ia = a.index();
  return g.push(OpKind::kScale, a.shape(), std::move(out), {ia}, [ia, factor](Graph& g, Index self) {
    auto dy = g.grad_view(self);
    kernels::axpy(factor, dy.data(), g.grad(ia).data(), dy.size());
  });
}

Var tanh(Var a) {
  Graph& g = graph_of(a);
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  const Index ia = a.index();
  return g.push(OpKind::kTanh, a.shape(), std::move(out), {ia}, [ia](Graph& g, Index self) {
    auto dy = g.grad_view(self);
    auto y = g.value(self);
    auto da = g.grad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(av[i]);
  const Index ia = a.index();
  return g.push(OpKind::kSigmoid, a.shape(), std::move(out), {ia}, [ia](Graph& g, Index self) {
    auto dy = g.grad_view(self);
    auto y = g.value(self);
    auto da = g.grad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Graph& g = graph_of(parts.front());
  std::vector<double> out;
  std::vector<Index> inputs;
  std::vector<std::size_t> offsets;
  for (Var p : parts) {
    graph_of(parts.front(), p);
    require_vector("concat", p.shape());
    offsets.push_back(out.size());
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
    inputs.push_back(p.index());
  }
  const std::size_t n = out.size();
  auto ins = inputs;
  return g.push(OpKind::kConcat, {n}, std::move(out), std::move(inputs),
                [ins, offsets](Graph& g, Index self) {
                  auto dy = g.grad_view(self);
                  for (std::size_t k = 0; k < ins.size(); ++k) {
                    if (!g.requires_grad(ins[k])) continue;
                    auto dx = g.grad(ins[k]);
                    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[offsets[k] + i];
                  }
                });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (!is_matrix(sa) || !is_matrix(sb) || sa[0] != sb[0]) mismatch("concat_cols", sa, sb);
  const std::size_t m = sa[0], p = sa[1], q = sb[1];
  std::vector<double> out(m * (p + q));
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(av.data() + r * p, p, out.data() + r * (p + q));
    std::copy_n(bv.data() + r * q, q, out.data() + r * (p + q) + p);
  }
  const Index ia = a.index(), ib = b.index();
  return g.push(OpKind::kConcatCols, {m, p + q}, std::move(out), {ia, ib},
                [ia, ib, m, p, q](Graph& g, Index self) {
                  auto dy = g.grad_view(self);
                  if (g.requires_grad(ia)) {
                    auto da = g.grad(ia);
                    for (std::size_t r = 0; r < m; ++r)
                      for (std::size_t c = 0; c < p; ++c) da[r * p + c] += dy[r * (p + q) + c];
                  }
                  if (g.requires_grad(ib)) {
                    auto db = g.grad(ib);
                    for (std::size_t r = 0; r < m; ++r)
                      for (std::size_t c = 0; c < q; ++c) db[r * q + c] += dy[r * (p + q) + p + c];
                  }
                });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  Graph& g = graph_of(rows.front());
  const Shape first = rows.front().shape();
  require_vector("stack_rows", first);
  const std::size_t d = first[0];
  std::vector<double> out;
  out.reserve(rows.size() * d);
  std::vector<Index> inputs;
  for (Var r : rows) {
    graph_of(rows.front(), r);
    if (r.shape() != first) mismatch("stack_rows", first, r.shape());
    auto v = r.values();
    out.insert(out.end(), v.begin(), v.end());
    inputs.push_back(r.index());
  }
  auto ins = inputs;
  return g.push(OpKind::kStackRows, {rows.size(), d}, std::move(out), std::move(inputs),
                [ins, d](Graph& g, Index self) {
                  auto dy = g.grad_view(self);
                  for (std::size_t k = 0; k < ins.size(); ++k) {
                    if (!g.requires_grad(ins[k])) continue;
                    kernels::axpy(1.0, dy.data() + k * d, g.grad(ins[k]).data(), d);
                  }
                });
}

Var row(Var m, std::size_t r) {
  Graph& g = graph_of(m);
  const Shape& s = m.shape();
  require_matrix("row", s);
  if (r >= s[0]) throw IndexError("row " + std::to_string(r) + " out of range for " + shape_string(s));
  const std::size_t d = s[1];
  auto v = m.values();
  std::vector<double> out(v.begin() + r * d, v.begin() + (r + 1) * d);
  const Index im = m.index();
  return g.push(OpKind::kRow, {d}, std::move(out), {im}, [im, r, d](Graph& g, Index self) {
    kernels::axpy(1.0, g.grad_view(self).data(), g.grad(im).data() + r * d, d);
  });
}

Var slice(Var v, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(v);
  require_vector("slice", v.shape());
  if (begin >= end || end > v.shape()[0]) {
    throw IndexError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of range for " + shape_string(v.shape()));
  }
  auto vals = v.values();
  std::vector<double> out(vals.begin() + begin, vals.begin() + end);
  const Index iv = v.index();
  return g.push(OpKind::kSlice, {end - begin}, std::move(out), {iv}, [iv, begin, end](Graph& g, Index self) {
    kernels::axpy(1.0, g.grad_view(self).data(), g.grad(iv).data() + begin, end - begin);
  });
}

Var softmax(Var v) {
  Graph& g = graph_of(v);
  require_vector("softmax", v.shape());
  auto vals = v.values();
  if (vals.empty()) throw DomainError("softmax of an empty vector");
  std::vector<double> out(vals.begin(), vals.end());
  softmax_inplace(out);
  const Index iv = v.index();
  return g.push(OpKind::kSoftmax, v.shape(), std::move(out), {iv}, [iv](Graph& g, Index self) {
    softmax_backward(g.value(self), g.grad_view(self), g.grad(iv));
  });
}

Var softmax_rows(Var m) {
  Graph& g = graph_of(m);
  require_matrix("softmax_rows", m.shape());
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  auto vals = m.values();
  std::vector<double> out(vals.begin(), vals.end());
  for (std::size_t r = 0; r < rows; ++r) softmax_inplace(std::span<double>(out.data() + r * cols, cols));
  const Index im = m.index();
  return g.push(OpKind::kSoftmaxRows, m.shape(), std::move(out), {im}, [im, rows, cols](Graph& g, Index self) {
    auto y = g.value(self);
    auto dy = g.grad_view(self);
    auto dx = g.grad(im);
    for (std::size_t r = 0; r < rows; ++r) {
      softmax_backward(y.subspan(r * cols, cols), dy.subspan(r * cols, cols), dx.subspan(r * cols, cols));
    }
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  double total = 0.0;
  for (double v : a.values()) total += v;
  const Index ia = a.index();
  return g.push(OpKind::kSum, {}, {total}, {ia}, [ia](Graph& g, Index self) {
    const double dy = g.grad_view(self)[0];
    for (double& d : g.grad(ia)) d += dy;
  });
}

Var dot(Var a, Var b) {
  Graph& g = graph_of(a, b);
  if (!is_vector(a.shape()) || a.shape() != b.shape()) mismatch("dot", a.shape(), b.shape());
  const double value = kernels::dot(a.values().data(), b.values().data(), a.values().size());
  const Index ia = a.index(), ib = b.index();
  return g.push(OpKind::kDot, {}, {value}, {ia, ib}, [ia, ib](Graph& g, Index self) {
    const double dy = g.grad_view(self)[0];
    if (g.requires_grad(ia)) kernels::axpy(dy, g.value(ib).data(), g.grad(ia).data(), g.value(ib).size());
    if (g.requires_grad(ib)) kernels::axpy(dy, g.value(ia).data(), g.grad(ib).data(), g.value(ia).size());
  });
}

Var embedding_lookup(Var table, std::size_t index) {
  Graph& g = graph_of(table);
  require_matrix("embedding_lookup", table.shape());
  const std::size_t rows = table.shape()[0], d = table.shape()[1];
  if (index >= rows) {
    throw IndexError("embedding index " + std::to_string(index) + " out of range for table " +
                     shape_string(table.shape()));
  }
  auto v = table.values();
  std::vector<double> out(v.begin() + index * d, v.begin() + (index + 1) * d);
  const Index it = table.index();
  return g.push(OpKind::kEmbedding, {d}, std::move(out), {it}, [it, index, d](Graph& g, Index self) {
    kernels::axpy(1.0, g.grad_view(self).data(), g.grad(it).data() + index * d, d);
  });
}

Var cross_entropy(Var probs, std::size_t gold) {
  Graph& g = graph_of(probs);
  require_vector("cross_entropy", probs.shape());
  const std::size_t n = probs.shape()[0];
  if (gold >= n) {
    throw IndexError("gold label " + std::to_string(gold) + " out of range for " + std::to_string(n) + " classes");
  }
  const double p = probs.values()[gold];
  const double loss = -std::log(std::max(p, kProbabilityFloor));
  const Index ip = probs.index();
  return g.push(OpKind::kCrossEntropy, {}, {loss}, {ip}, [ip, gold](Graph& g, Index self) {
    const double p = g.value(ip)[gold];
    if (p > kProbabilityFloor) g.grad(ip)[gold] += -g.grad_view(self)[0] / p;
  });
}

LstmState lstm_step(const LstmParams& params, Var input, const LstmState& state) {
  Graph& g = graph_of(input);
  const std::size_t hidden = params.hidden_size;
  const Shape& swx = params.input_weights.shape();
  const Shape& swh = params.recurrent_weights.shape();
  const Shape& sb = params.biases.shape();
  require_vector("lstm_step input", input.shape());
  const std::size_t d_in = input.shape()[0];
  if (!is_matrix(swx) || swx[0] != 4 * hidden || swx[1] != d_in) mismatch("lstm_step input weights", swx, input.shape());
  if (!is_matrix(swh) || swh[0] != 4 * hidden || swh[1] != hidden) mismatch("lstm_step recurrent weights", swh, state.h.shape());
  if (!is_vector(sb) || sb[0] != 4 * hidden) mismatch("lstm_step biases", sb, swx);
  if (state.h.shape() != Shape{hidden} || state.c.shape() != Shape{hidden}) {
    mismatch("lstm_step state", state.h.shape(), state.c.shape());
  }
  graph_of(input, params.input_weights);
  graph_of(input, state.h);

  // Pre-activations z = Wx x + Wh h + b, then gates [i, f, g~, o].
  std::vector<double> gates(4 * hidden);
  std::vector<double> tmp(4 * hidden);
  kernels::gemv(params.input_weights.values().data(), 4 * hidden, d_in, input.values().data(), gates.data());
  kernels::gemv(params.recurrent_weights.values().data(), 4 * hidden, hidden, state.h.values().data(), tmp.data());
  auto bias = params.biases.values();
  for (std::size_t k = 0; k < 4 * hidden; ++k) gates[k] += tmp[k] + bias[k];
  for (std::size_t k = 0; k < hidden; ++k) {
    gates[k] = sigmoid_scalar(gates[k]);
    gates[hidden + k] = sigmoid_scalar(gates[hidden + k]);
    gates[2 * hidden + k] = std::tanh(gates[2 * hidden + k]);
    gates[3 * hidden + k] = sigmoid_scalar(gates[3 * hidden + k]);
  }
  auto c_prev = state.c.values();
  std::vector<double> out(2 * hidden);  // [h', c']
  std::vector<double> saved(5 * hidden);  // gates then tanh(c')
  for (std::size_t k = 0; k < hidden; ++k) {
    const double c = gates[hidden + k] * c_prev[k] + gates[k] * gates[2 * hidden + k];
    const double tc = std::tanh(c);
    out[hidden + k] = c;
    out[k] = gates[3 * hidden + k] * tc;
    saved[4 * hidden + k] = tc;
  }
  std::copy(gates.begin(), gates.end(), saved.begin());

  const Index ix = input.index(), ih = state.h.index(), ic = state.c.index();
  const Index iwx = params.input_weights.index(), iwh = params.recurrent_weights.index(),
              ib = params.biases.index();
  Var cell = g.push(OpKind::kLstmStep, {2 * hidden}, std::move(out), {ix, ih, ic, iwx, iwh, ib},
                    [ix, ih, ic, iwx, iwh, ib, hidden, d_in](Graph& g, Index self) {
                      const std::vector<double>& s = g.node(self).saved;
                      auto dy = g.grad_view(self);
                      auto c_prev = g.value(ic);
                      std::vector<double> dz(4 * hidden);
                      std::vector<double> dc_prev(hidden);
                      for (std::size_t k = 0; k < hidden; ++k) {
                        const double i = s[k], f = s[hidden + k], gt = s[2 * hidden + k],
                                     o = s[3 * hidden + k], tc = s[4 * hidden + k];
                        const double dh = dy[k];
                        const double dc = dy[hidden + k] + dh * o * (1.0 - tc * tc);
                        dz[k] = dc * gt * i * (1.0 - i);
                        dz[hidden + k] = dc * c_prev[k] * f * (1.0 - f);
                        dz[2 * hidden + k] = dc * i * (1.0 - gt * gt);
                        dz[3 * hidden + k] = dh * tc * o * (1.0 - o);
                        dc_prev[k] = dc * f;
                      }
                      if (g.requires_grad(ic)) kernels::axpy(1.0, dc_prev.data(), g.grad(ic).data(), hidden);
                      if (g.requires_grad(ib)) kernels::axpy(1.0, dz.data(), g.grad(ib).data(), 4 * hidden);
                      if (g.requires_grad(iwx))
                        kernels::ger_acc(g.grad(iwx).data(), 4 * hidden, d_in, dz.data(), g.value(ix).data());
                      if (g.requires_grad(iwh))
                        kernels::ger_acc(g.grad(iwh).data(), 4 * hidden, hidden, dz.data(), g.value(ih).data());
                      if (g.requires_grad(ix))
                        kernels::gemv_t_acc(g.value(iwx).data(), 4 * hidden, d_in, dz.data(), g.grad(ix).data());
                      if (g.requires_grad(ih))
                        kernels::gemv_t_acc(g.value(iwh).data(), 4 * hidden, hidden, dz.data(), g.grad(ih).data());
                    });
  g.saved(cell.index()) = std::move(saved);
  return {slice(cell, 0, hidden), slice(cell, hidden, 2 * hidden)};
}

void add_lstm_params(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden, Rng& rng) {
  store.add(prefix + ".Wx", {4 * hidden, input_dim}, Init::kXavier, rng);
  store.add(prefix + ".Wh", {4 * hidden, hidden}, Init::kXavier, rng);
  store.add(prefix + ".b", {4 * hidden}, Init::kLstmBias, rng);
}

LstmParams lstm_params(Graph& g, const std::string& prefix) {
  LstmParams p;
  p.input_weights = g.param(prefix + ".Wx");
  p.recurrent_weights = g.param(prefix + ".Wh");
  p.biases = g.param(prefix + ".b");
  p.hidden_size = p.recurrent_weights.shape()[1];
  return p;
}

}  // namespace ctxslu::diff
