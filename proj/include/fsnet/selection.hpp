#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fsnet/embedding.hpp"
#include "fsnet/matrix.hpp"
#include "fsnet/rng.hpp"
#include "fsnet/tape.hpp"

namespace fsnet {

/// Floor applied to selection probabilities before taking their log.
inline constexpr double kLogFloor = 1e-30;

/// Selection probabilities Δ (K x d, every column on the simplex) and temperature.
struct ConcreteState {
  Matrix delta;
  double temperature = 1.0;
};

/// Relaxed one-hot selection matrix M (K x d); each row sums to one.
struct GateMatrix {
  Matrix gates;

  std::size_t selected() const { return gates.rows(); }
  std::size_t features() const { return gates.cols(); }
};

/// Δ = column-wise softmax of predictor · φᵀ. `predictor` is K x b, embeddings d x b.
ConcreteState predict_logits(const Matrix& predictor, const FeatureEmbeddings& embeddings,
                             double temperature);

/// Row k of M = softmax over features of (log Δ[k,:] + g[k,:]) / τ with g drawn from `rng`.
GateMatrix sample_gates(const ConcreteState& state, Rng& rng);
/// As sample_gates, with explicit Gumbel noise (K x d).
GateMatrix gates_from_noise(const ConcreteState& state, const Matrix& gumbel);

/// x^S = M x for one sample.
std::vector<double> select_forward(const GateMatrix& m, std::span<const double> x);

/// τ0 (τE/τ0)^(e/E).
double anneal_temperature(std::size_t epoch, std::size_t epochs, double tau0, double tau_end);

/// Greedy unique argmax over a nonnegative d x K matrix: K times, take the largest
/// remaining cell, emit its row, then retire that row and column. Ties go to the
/// lowest (row, column). Indices come back in extraction order.
std::vector<std::size_t> unique_argmax(const Matrix& a);

/// Plain per-row argmax of M (K x d); may repeat indices.
std::vector<std::size_t> row_argmax(const Matrix& m);

/// Coordinates of one sample at `indices`.
std::vector<double> gather(std::span<const double> x, std::span<const std::size_t> indices);

namespace graph {

/// Column-wise softmax of the K x d selection logits.
ad::Var selection_probabilities(ad::Var logits);
/// Gumbel-softmax gates from Δ with fixed noise `gumbel` (treated as a constant).
ad::Var concrete_gates(ad::Var delta, const Matrix& gumbel, double temperature);

}  // namespace graph

}  // namespace fsnet
