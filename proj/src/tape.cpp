#include "fsnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fsnet::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

Tape& mutable_tape(Var v) {
  if (v.tape == nullptr) throw std::invalid_argument("ad: variable is not recorded on a tape");
  return const_cast<Tape&>(*v.tape);
}

Tape& common_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("ad: operands recorded on different tapes");
  return mutable_tape(a);
}

}  // namespace

Var Tape::variable(Matrix value) {
  Var v = record(std::move(value), {}, nullptr);
  nodes_[v.id].requires_grad = true;
  nodes_[v.id].leaf = true;
  return v;
}

Var Tape::constant(Matrix value) {
  Var v = record(std::move(value), {}, nullptr);
  nodes_[v.id].leaf = true;
  return v;
}

void Tape::check(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw std::invalid_argument("ad: node " + std::to_string(v.id) + " is not recorded on this tape");
  }
}

const Matrix& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id].value;
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.id].requires_grad;
}

Matrix Tape::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward) {
  if (backward_done_) throw std::logic_error("ad: tape already differentiated");
  Node node;
  node.value = std::move(value);
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw std::invalid_argument("ad: unrecorded parent node");
    node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  auto dst = n.grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  check(loss);
  if (backward_done_) throw std::logic_error("ad: backward already run on this tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("ad: backward target must be 1x1, got " + lv.shape_string());
  }
  backward_done_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.leaf || !n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.value, n.grad);
  }
}

// --- operations -------------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require_same_shape(av, bv, "add");
  Matrix out = av;
  auto o = out.values();
  auto bs = bv.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bs[i];
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var scale(Var a, double s) {
  Tape& t = mutable_tape(a);
  Matrix out = t.value(a);
  for (double& x : out.values()) x *= s;
  return t.record(std::move(out), {a.id}, [a, s](Tape& tp, const Matrix&, const Matrix& g) {
    Matrix ga = g;
    for (double& x : ga.values()) x *= s;
    tp.accumulate(a, ga);
  });
}

Var add_row(Var a, Var row) {
  Tape& t = common_tape(a, row);
  const Matrix& av = t.value(a);
  const Matrix& rv = t.value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw std::invalid_argument("add_row: " + av.shape_string() + " + " + rv.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  return t.record(std::move(out), {a.id, row.id}, [a, row](Tape& tp, const Matrix&, const Matrix& g) {
    tp.accumulate(a, g);
    Matrix sum(1, g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) sum(0, j) += g(i, j);
    tp.accumulate(row, sum);
  });
}

Var add_constant(Var a, const Matrix& c) {
  Tape& t = mutable_tape(a);
  const Matrix& av = t.value(a);
  require_same_shape(av, c, "add_constant");
  Matrix out = av;
  auto o = out.values();
  auto cs = c.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += cs[i];
  return t.record(std::move(out), {a.id},
                  [a](Tape& tp, const Matrix&, const Matrix& g) { tp.accumulate(a, g); });
}

Var hadamard(Var a, Var b) {
  Tape& t = common_tape(a, b);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require_same_shape(av, bv, "hadamard");
  Matrix out = av;
  auto o = out.values();
  auto bs = bv.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bs[i];
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
    const Matrix& av2 = tp.value(a);
    const Matrix& bv2 = tp.value(b);
    if (tp.requires_grad(a)) {
      Matrix ga = g;
      auto x = ga.values();
      auto y = bv2.values();
      for (std::size_t i = 0; i < x.size(); ++i) x[i] *= y[i];
      tp.accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Matrix gb = g;
      auto x = gb.values();
      auto y = av2.values();
      for (std::size_t i = 0; i < x.size(); ++i) x[i] *= y[i];
      tp.accumulate(b, gb);
    }
  });
}

Var mask(Var a, const Matrix& m) {
  Tape& t = mutable_tape(a);
  const Matrix& av = t.value(a);
  require_same_shape(av, m, "mask");
  Matrix out = av;
  auto o = out.values();
  auto ms = m.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= ms[i];
  return t.record(std::move(out), {a.id}, [a, m](Tape& tp, const Matrix&, const Matrix& g) {
    Matrix ga = g;
    auto x = ga.values();
    auto y = m.values();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= y[i];
    tp.accumulate(a, ga);
  });
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  Matrix out = fsnet::matmul(t.value(a), t.value(b));
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
    // C = A B: dA = G Bᵀ, dB = Aᵀ G
    if (tp.requires_grad(a)) tp.accumulate(a, fsnet::matmul_nt(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, fsnet::matmul_tn(tp.value(a), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = common_tape(a, b);
  Matrix out = fsnet::matmul_nt(t.value(a), t.value(b));
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
    // C = A Bᵀ: dA = G B, dB = Gᵀ A
    if (tp.requires_grad(a)) tp.accumulate(a, fsnet::matmul(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, fsnet::matmul_tn(g, tp.value(a)));
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = mutable_tape(a);
  Matrix out = t.value(a);
  for (double& x : out.values()) x = fsnet::leaky_relu(x, slope);
  return t.record(std::move(out), {a.id}, [a, slope](Tape& tp, const Matrix&, const Matrix& g) {
    Matrix ga = g;
    auto x = ga.values();
    auto in = tp.value(a).values();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (in[i] < 0.0) x[i] *= slope;
    tp.accumulate(a, ga);
  });
}

Var tanh(Var a) {
  Tape& t = mutable_tape(a);
  Matrix out = t.value(a);
  for (double& x : out.values()) x = std::tanh(x);
  return t.record(std::move(out), {a.id}, [a](Tape& tp, const Matrix& y, const Matrix& g) {
    Matrix ga = g;
    auto x = ga.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= 1.0 - yv[i] * yv[i];
    tp.accumulate(a, ga);
  });
}

Var log_floor(Var a, double floor) {
  Tape& t = mutable_tape(a);
  Matrix out = t.value(a);
  for (double& x : out.values()) x = std::log(std::max(x, floor));
  return t.record(std::move(out), {a.id}, [a, floor](Tape& tp, const Matrix&, const Matrix& g) {
    Matrix ga = g;
    auto x = ga.values();
    auto in = tp.value(a).values();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = in[i] > floor ? x[i] / in[i] : 0.0;
    tp.accumulate(a, ga);
  });
}

namespace {

// Softmax Jacobian-vector product along one strided line: g_in = y ⊙ (g − ⟨g, y⟩).
void softmax_line_backward(const double* y, const double* g, double* out, std::size_t n,
                           std::size_t stride) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g[i * stride] * y[i * stride];
  for (std::size_t i = 0; i < n; ++i) out[i * stride] = y[i * stride] * (g[i * stride] - dot);
}

void softmax_line_forward(const double* x, double* y, std::size_t n, std::size_t stride) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i * stride]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i * stride] = std::exp(x[i * stride] - mx);
    total += y[i * stride];
  }
  for (std::size_t i = 0; i < n; ++i) y[i * stride] /= total;
}

}  // namespace

Var softmax_rows(Var a) {
  Tape& t = mutable_tape(a);
  const Matrix& av = t.value(a);
  if (av.cols() == 0) throw std::invalid_argument("softmax_rows: empty rows");
  Matrix out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    softmax_line_forward(av.row(r).data(), out.row(r).data(), av.cols(), 1);
  return t.record(std::move(out), {a.id}, [a](Tape& tp, const Matrix& y, const Matrix& g) {
    Matrix ga(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r)
      softmax_line_backward(y.row(r).data(), g.row(r).data(), ga.row(r).data(), y.cols(), 1);
    tp.accumulate(a, ga);
  });
}

Var softmax_cols(Var a) {
  Tape& t = mutable_tape(a);
  const Matrix& av = t.value(a);
  if (av.rows() == 0) throw std::invalid_argument("softmax_cols: empty columns");
  Matrix out(av.rows(), av.cols());
  const std::size_t stride = av.cols();
  for (std::size_t c = 0; c < av.cols(); ++c)
    softmax_line_forward(av.values().data() + c, out.values().data() + c, av.rows(), stride);
  return t.record(std::move(out), {a.id}, [a](Tape& tp, const Matrix& y, const Matrix& g) {
    Matrix ga(y.rows(), y.cols());
    const std::size_t s = y.cols();
    for (std::size_t c = 0; c < y.cols(); ++c)
      softmax_line_backward(y.values().data() + c, g.values().data() + c,
                            ga.values().data() + c, y.rows(), s);
    tp.accumulate(a, ga);
  });
}

Var element(Var a, std::size_t r, std::size_t c) {
  Tape& t = mutable_tape(a);
  const Matrix& av = t.value(a);
  if (r >= av.rows() || c >= av.cols()) {
    throw std::out_of_range("element: (" + std::to_string(r) + "," + std::to_string(c) +
                            ") outside " + av.shape_string());
  }
  return t.record(Matrix(1, 1, av(r, c)), {a.id},
                  [a, r, c](Tape& tp, const Matrix&, const Matrix& g) {
                    const Matrix& v = tp.value(a);
                    Matrix ga(v.rows(), v.cols());
                    ga(r, c) = g(0, 0);
                    tp.accumulate(a, ga);
                  });
}

Var cross_entropy_sum(Var probs, std::span<const int> labels, double floor) {
  Tape& t = mutable_tape(probs);
  const Matrix& p = t.value(probs);
  if (labels.size() != p.rows()) {
    throw std::invalid_argument("cross_entropy_sum: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(p.rows()) + " rows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= p.cols()) {
      throw std::out_of_range("cross_entropy_sum: label " + std::to_string(y) +
                              " outside 0.." + std::to_string(p.cols() - 1));
    }
    total -= std::log(std::max(p(i, static_cast<std::size_t>(y)), floor));
  }
  std::vector<int> ys(labels.begin(), labels.end());
  return t.record(Matrix(1, 1, total), {probs.id},
                  [probs, ys = std::move(ys), floor](Tape& tp, const Matrix&, const Matrix& g) {
                    const Matrix& pv = tp.value(probs);
                    Matrix gp(pv.rows(), pv.cols());
                    for (std::size_t i = 0; i < pv.rows(); ++i) {
                      const auto y = static_cast<std::size_t>(ys[i]);
                      const double pi = pv(i, y);
                      if (pi > floor) gp(i, y) = -g(0, 0) / pi;
                    }
                    tp.accumulate(probs, gp);
                  });
}

Var squared_error_sum(Var a, const Matrix& target) {
  Tape& t = mutable_tape(a);
  const Matrix& av = t.value(a);
  require_same_shape(av, target, "squared_error_sum");
  double total = 0.0;
  auto x = av.values();
  auto y = target.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    total += diff * diff;
  }
  return t.record(Matrix(1, 1, total), {a.id},
                  [a, target](Tape& tp, const Matrix&, const Matrix& g) {
                    const Matrix& v = tp.value(a);
                    Matrix ga(v.rows(), v.cols());
                    auto o = ga.values();
                    auto xv = v.values();
                    auto yv = target.values();
                    const double s = 2.0 * g(0, 0);
                    for (std::size_t i = 0; i < o.size(); ++i) o[i] = s * (xv[i] - yv[i]);
                    tp.accumulate(a, ga);
                  });
}

}  // namespace fsnet::ad
