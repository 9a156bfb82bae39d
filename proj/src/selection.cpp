#include "fsnet/selection.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fsnet {

namespace graph {

ad::Var selection_probabilities(ad::Var logits) { return ad::softmax_cols(logits); }

ad::Var concrete_gates(ad::Var delta, const Matrix& gumbel, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("concrete_gates: temperature must be > 0");
  ad::Var log_delta = ad::log_floor(delta, kLogFloor);
  ad::Var perturbed = ad::add_constant(log_delta, gumbel);
  return ad::softmax_rows(ad::scale(perturbed, 1.0 / temperature));
}

}  // namespace graph

ConcreteState predict_logits(const Matrix& predictor, const FeatureEmbeddings& embeddings,
                             double temperature) {
  if (predictor.cols() != embeddings.size()) {
    throw std::invalid_argument("predict_logits: predictor is " + predictor.shape_string() +
                                " but embeddings have b=" + std::to_string(embeddings.size()));
  }
  ad::Tape tape;
  ad::Var w = tape.constant(predictor);
  ad::Var phi = tape.constant(embeddings.table());
  ad::Var delta = graph::selection_probabilities(ad::matmul_nt(w, phi));
  return ConcreteState{tape.value(delta), temperature};
}

GateMatrix gates_from_noise(const ConcreteState& state, const Matrix& gumbel) {
  ad::Tape tape;
  ad::Var delta = tape.constant(state.delta);
  ad::Var m = graph::concrete_gates(delta, gumbel, state.temperature);
  return GateMatrix{tape.value(m)};
}

GateMatrix sample_gates(const ConcreteState& state, Rng& rng) {
  const std::size_t k = state.delta.rows();
  const std::size_t d = state.delta.cols();
  Matrix noise(k, d, sample_gumbel(rng, k * d));
  return gates_from_noise(state, noise);
}

std::vector<double> select_forward(const GateMatrix& m, std::span<const double> x) {
  if (x.size() != m.features()) {
    throw std::invalid_argument("select_forward: sample has " + std::to_string(x.size()) +
                                " features, gate matrix is " + m.gates.shape_string());
  }
  std::vector<double> out(m.selected(), 0.0);
  for (std::size_t k = 0; k < m.selected(); ++k) {
    auto row = m.gates.row(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += row[j] * x[j];
    out[k] = acc;
  }
  return out;
}

double anneal_temperature(std::size_t epoch, std::size_t epochs, double tau0, double tau_end) {
  if (epochs == 0) throw std::invalid_argument("anneal_temperature: epoch count must be >= 1");
  if (epoch > epochs) throw std::invalid_argument("anneal_temperature: epoch beyond schedule");
  if (!(tau0 > 0.0) || !(tau_end > 0.0)) {
    throw std::invalid_argument("anneal_temperature: temperatures must be > 0");
  }
  if (epoch == 0) return tau0;
  if (epoch == epochs) return tau_end;
  const double fraction = static_cast<double>(epoch) / static_cast<double>(epochs);
  return tau0 * std::pow(tau_end / tau0, fraction);
}

std::vector<std::size_t> unique_argmax(const Matrix& a) {
  const std::size_t d = a.rows();
  const std::size_t k = a.cols();
  if (k > d) {
    throw std::invalid_argument("unique_argmax: K=" + std::to_string(k) +
                                " exceeds row count d=" + std::to_string(d));
  }
  for (double v : a.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("unique_argmax: entries must be finite and nonnegative");
    }
  }
  // Retired rows/columns are excluded outright rather than zeroed, so an all-zero
  // remainder cannot hand back an already selected row.
  std::vector<char> row_used(d, 0);
  std::vector<char> col_used(k, 0);
  std::vector<std::size_t> selected;
  selected.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best_r = d;
    std::size_t best_c = k;
    double best = -1.0;
    for (std::size_t r = 0; r < d; ++r) {
      if (row_used[r]) continue;
      auto row = a.row(r);
      for (std::size_t c = 0; c < k; ++c) {
        if (!col_used[c] && row[c] > best) {
          best = row[c];
          best_r = r;
          best_c = c;
        }
      }
    }
    selected.push_back(best_r);
    row_used[best_r] = 1;
    col_used[best_c] = 1;
  }
  return selected;
}

std::vector<std::size_t> row_argmax(const Matrix& m) {
  std::vector<std::size_t> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[out[r]]) out[r] = c;
  }
  return out;
}

std::vector<double> gather(std::span<const double> x, std::span<const std::size_t> indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t j : indices) {
    if (j >= x.size()) {
      throw std::out_of_range("gather: index " + std::to_string(j) + " outside sample of " +
                              std::to_string(x.size()) + " features");
    }
    out.push_back(x[j]);
  }
  return out;
}

}  // namespace fsnet
