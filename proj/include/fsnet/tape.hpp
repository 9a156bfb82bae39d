#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fsnet/matrix.hpp"

// Matrix-valued reverse-mode differentiation for the fixed set of operations the
// FsNet graph needs. Every node is appended after its inputs, so node order is a
// topological order and backward() is a single reverse sweep.
namespace fsnet::ad {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  const Tape* tape = nullptr;
  std::size_t id = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose gradient is tracked.
  Var variable(Matrix value);
  /// Leaf treated as a constant.
  Var constant(Matrix value);

  const Matrix& value(Var v) const;
  /// Gradient of the last backward() target w.r.t. `v`. Zero-shaped like value when unreached.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const;

  /// Reverse sweep from a 1x1 node. May be called once per recording.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  using BackwardFn =
      std::function<void(Tape&, const Matrix& output, const Matrix& upstream)>;
  Var record(Matrix value, std::vector<std::size_t> parents, BackwardFn backward);
  void accumulate(Var v, const Matrix& g);
  void check(Var v) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool leaf = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Var add(Var a, Var b);
Var scale(Var a, double s);
/// a + 1·r: adds the 1 x m row r to every row of the n x m matrix a.
Var add_row(Var a, Var row);
/// a + c for a constant c of the same shape.
Var add_constant(Var a, const Matrix& c);
/// Elementwise a ⊙ b.
Var hadamard(Var a, Var b);
/// Elementwise a ⊙ mask for a constant mask (dropout).
Var mask(Var a, const Matrix& m);
Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_nt(Var a, Var b);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
/// log(max(a, floor)); gradient is zero where the floor is active.
Var log_floor(Var a, double floor);
/// Softmax across each row.
Var softmax_rows(Var a);
/// Softmax down each column.
Var softmax_cols(Var a);
/// Scalar (1x1) holding a(r, c).
Var element(Var a, std::size_t r, std::size_t c);
/// Σᵢ −log(max(p[i, yᵢ], floor)) over rows of a probability matrix.
Var cross_entropy_sum(Var probs, std::span<const int> labels, double floor);
/// Σ (a − target)² over all entries.
Var squared_error_sum(Var a, const Matrix& target);

}  // namespace fsnet::ad
