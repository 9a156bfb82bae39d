#include "fsnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fsnet/tape.hpp"
#include "fsnet/text.hpp"

namespace fsnet {

DivergenceError::DivergenceError(std::size_t epoch, double temperature, const std::string& what)
    : std::runtime_error(what), epoch_(epoch), temperature_(temperature) {}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (k < 1) fail("k must be >= 1");
  if (mode == Mode::predictor && b < 1) fail("b must be >= 1");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(learning_rate >= 0.0)) fail("learning rate must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(tau_end > 0.0)) fail("tauE must be > 0");
  if (!(tau0 > tau_end)) fail("tau0 must exceed tauE");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail("leaky slope must lie in (0, 1)");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) fail("rmsprop decay must lie in [0, 1)");
  if (!(rmsprop_epsilon > 0.0)) fail("rmsprop epsilon must be > 0");
}

Architecture TrainConfig::architecture(std::size_t features, std::size_t classes) const {
  Architecture arch;
  arch.inputs = features;
  arch.selected = k;
  arch.encoder = encoder;
  arch.classifier_hidden = classifier_hidden;
  arch.classes = classes;
  arch.decoder = decoder;
  arch.biases = biases;
  arch.validate();
  return arch;
}

namespace {

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : m.values()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return m;
}

std::vector<Matrix> masks_for(std::size_t rows, const std::vector<std::size_t>& widths,
                              double rate, Rng& rng) {
  std::vector<Matrix> out;
  for (std::size_t w : widths) out.push_back(dropout_mask(rows, w, rate, rng));
  return out;
}

struct LossVars {
  ad::Var total;
  ad::Var classification;
  ad::Var reconstruction;
};

// Encoder → classifier / decoder → reconstruction on the selected inputs.
LossVars record_network_loss(ad::Tape& tape, const graph::ParameterVars& p, Mode mode,
                             const ad::Var* phi, ad::Var gates, const Batch& batch,
                             const EpochNoise* noise, double lambda, double slope) {
  static const std::vector<Matrix> kNoMasks;
  const auto& enc_masks = noise ? noise->encoder_masks : kNoMasks;
  const auto& cls_masks = noise ? noise->classifier_masks : kNoMasks;
  const auto& dec_masks = noise ? noise->decoder_masks : kNoMasks;

  ad::Var x = tape.constant(batch.x);
  ad::Var xs = ad::matmul_nt(x, gates);  // n x K, row i = M x_i
  ad::Var h = graph::hidden_stack(p.encoder, p.encoder_bias, xs, slope, enc_masks);
  ad::Var probs = graph::classifier_head(p.classifier, p.classifier_bias, h, slope, cls_masks);
  ad::Var ce = ad::cross_entropy_sum(probs, batch.labels, kProbabilityFloor);

  ad::Var h_tilde = graph::hidden_stack(p.decoder, p.decoder_bias, h, slope, dec_masks);
  ad::Var w_rt = graph::reconstruction_weights(p.reconstruction, mode, phi);
  ad::Var x_hat = ad::matmul(h_tilde, w_rt);
  ad::Var rec = ad::squared_error_sum(x_hat, batch.target);
  ad::Var total = ad::add(ce, ad::scale(rec, lambda));
  return {total, ce, rec};
}

void check_batch(const Architecture& arch, const Batch& batch) {
  if (batch.x.cols() != arch.inputs || batch.target.cols() != arch.inputs ||
      batch.target.rows() != batch.x.rows()) {
    throw std::invalid_argument("loss: batch " + batch.x.shape_string() + " / target " +
                                batch.target.shape_string() + " incompatible with d=" +
                                std::to_string(arch.inputs));
  }
  for (int y : batch.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= arch.classes) {
      throw std::out_of_range("loss: label " + std::to_string(y) + " outside 0.." +
                              std::to_string(arch.classes - 1));
    }
  }
}

}  // namespace

EpochNoise draw_epoch_noise(const Architecture& arch, std::size_t samples, double dropout,
                            Rng& rng) {
  EpochNoise noise;
  noise.gumbel = Matrix(arch.selected, arch.inputs,
                        sample_gumbel(rng, arch.selected * arch.inputs));
  if (dropout > 0.0) {
    noise.encoder_masks = masks_for(samples, arch.encoder, dropout, rng);
    noise.classifier_masks = masks_for(samples, arch.classifier_hidden, dropout, rng);
    noise.decoder_masks = masks_for(samples, arch.decoder, dropout, rng);
  }
  return noise;
}

LossBreakdown loss(const Parameters& params, const Architecture& arch, Mode mode,
                   const FeatureEmbeddings* embeddings, const GateMatrix& gates, const Batch& batch,
                   double lambda, double slope) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("loss: lambda must be >= 0");
  check_batch(arch, batch);
  ad::Tape tape;
  const auto p = graph::record(tape, params, false);
  ad::Var phi;
  const ad::Var* phi_ptr = nullptr;
  if (mode == Mode::predictor) {
    if (embeddings == nullptr) throw std::invalid_argument("loss: embeddings required");
    phi = tape.constant(embeddings->table());
    phi_ptr = &phi;
  }
  ad::Var m = tape.constant(gates.gates);
  const LossVars v = record_network_loss(tape, p, mode, phi_ptr, m, batch, nullptr, lambda, slope);
  return {tape.value(v.total)(0, 0), tape.value(v.classification)(0, 0),
          tape.value(v.reconstruction)(0, 0)};
}

LossEvaluation evaluate_loss(const Parameters& params, const Architecture& arch, Mode mode,
                             const FeatureEmbeddings* embeddings, const Batch& batch,
                             const EpochNoise& noise, double temperature, double lambda,
                             double slope, bool with_gradients) {
  check_batch(arch, batch);
  ad::Tape tape;
  const auto p = graph::record(tape, params, with_gradients);
  ad::Var phi;
  const ad::Var* phi_ptr = nullptr;
  if (mode == Mode::predictor) {
    if (embeddings == nullptr) throw std::invalid_argument("evaluate_loss: embeddings required");
    if (embeddings->features() != arch.inputs) {
      throw std::invalid_argument("evaluate_loss: embeddings cover " +
                                  std::to_string(embeddings->features()) + " features, d=" +
                                  std::to_string(arch.inputs));
    }
    phi = tape.constant(embeddings->table());
    phi_ptr = &phi;
  }
  ad::Var logits = graph::selection_logits(p.selection, mode, phi_ptr);
  ad::Var delta = graph::selection_probabilities(logits);
  ad::Var gates = graph::concrete_gates(delta, noise.gumbel, temperature);
  const LossVars v =
      record_network_loss(tape, p, mode, phi_ptr, gates, batch, &noise, lambda, slope);

  LossEvaluation out;
  out.loss = {tape.value(v.total)(0, 0), tape.value(v.classification)(0, 0),
              tape.value(v.reconstruction)(0, 0)};
  out.gates = tape.value(gates);
  if (with_gradients) {
    tape.backward(v.total);
    const auto vars = p.all();
    Parameters g = params;
    auto slots = g.all();
    for (std::size_t i = 0; i < vars.size(); ++i) *slots[i] = tape.grad(vars[i]);
    out.gradients = std::move(g);
  }
  return out;
}

RmsProp::RmsProp(double learning_rate, double decay, double epsilon)
    : learning_rate_(learning_rate), decay_(decay), epsilon_(epsilon) {}

void RmsProp::step(Parameters& params, const Parameters& grads) {
  auto w = params.all();
  auto g = grads.all();
  if (w.size() != g.size()) throw std::invalid_argument("rmsprop: parameter/gradient mismatch");
  if (mean_square_.empty()) {
    for (const Matrix* m : w) mean_square_.emplace_back(m->rows(), m->cols());
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto wv = w[i]->values();
    auto gv = g[i]->values();
    auto vv = mean_square_[i].values();
    if (wv.size() != gv.size() || wv.size() != vv.size()) {
      throw std::invalid_argument("rmsprop: shape mismatch in parameter group " + std::to_string(i));
    }
    for (std::size_t j = 0; j < wv.size(); ++j) {
      vv[j] = decay_ * vv[j] + (1.0 - decay_) * gv[j] * gv[j];
      wv[j] -= learning_rate_ * gv[j] / (std::sqrt(vv[j]) + epsilon_);
    }
  }
}

// --- inference ------------------------------------------------------------------

namespace {

// Standardized values of the selected coordinates (n x K).
Matrix selected_inputs(const FsNetModel& model, const Matrix& x) {
  if (x.cols() != model.arch.inputs) {
    throw std::invalid_argument("model expects " + std::to_string(model.arch.inputs) +
                                " features, data is " + x.shape_string());
  }
  if (model.selected.size() != model.arch.selected) {
    throw std::invalid_argument("model has " + std::to_string(model.selected.size()) +
                                " selected indices, K=" + std::to_string(model.arch.selected));
  }
  Matrix xs(x.rows(), model.selected.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t k = 0; k < model.selected.size(); ++k) {
      const std::size_t j = model.selected[k];
      if (j >= x.cols()) throw std::out_of_range("selected index " + std::to_string(j) + " out of range");
      xs(i, k) = model.transform.apply_one(j, row[j]);
    }
  }
  return xs;
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows(), 0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

double accuracy_of(const std::vector<int>& predicted, const std::vector<int>& truth) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace

Matrix predict(const FsNetModel& model, const Matrix& x) {
  const Matrix xs = selected_inputs(model, x);
  const Parameters& p = model.params;
  const Matrix h = encode(p.encoder, xs, model.config.leaky_slope, p.encoder_bias);
  return classify(p.classifier, h, model.config.leaky_slope, p.classifier_bias);
}

std::vector<double> predict(const FsNetModel& model, std::span<const double> x) {
  Matrix row(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const Matrix p = predict(model, row);
  return {p.row(0).begin(), p.row(0).end()};
}

std::vector<int> predict_labels(const FsNetModel& model, const Matrix& x) {
  return argmax_rows(predict(model, x));
}

Matrix reconstruct_samples(const FsNetModel& model, const Matrix& x) {
  const Matrix xs = selected_inputs(model, x);
  const double slope = model.config.leaky_slope;
  const Parameters& p = model.params;
  const Matrix h = encode(p.encoder, xs, slope, p.encoder_bias);
  const Matrix h_tilde = decode(p.decoder, h, slope, p.decoder_bias);
  const FeatureEmbeddings* emb = model.config.mode == Mode::predictor ? &model.embeddings : nullptr;
  return reconstruct(model.params.reconstruction, model.config.mode, emb, h_tilde);
}

Matrix reconstruction_target(const FsNetModel& model, const Matrix& x) {
  if (model.config.raw_target) return x;
  return model.transform.apply(x);
}

ConcreteState selection_state(const FsNetModel& model, double temperature) {
  if (model.config.mode == Mode::predictor) {
    return predict_logits(model.params.selection, model.embeddings, temperature);
  }
  ad::Tape tape;
  ad::Var delta = graph::selection_probabilities(tape.constant(model.params.selection));
  return ConcreteState{tape.value(delta), temperature};
}

// --- training -------------------------------------------------------------------

TrainResult train(const Dataset& train_set, const TrainConfig& config, const Dataset* test_set,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.samples() == 0) throw std::invalid_argument("train: empty training set");
  const std::size_t d = train_set.features();
  if (config.k > d) {
    throw std::invalid_argument("train: K=" + std::to_string(config.k) +
                                " exceeds feature count d=" + std::to_string(d));
  }
  if (test_set != nullptr && test_set->features() != d) {
    throw std::invalid_argument("train: test set has " + std::to_string(test_set->features()) +
                                " features, training set has " + std::to_string(d));
  }

  FsNetModel model;
  model.config = config;
  model.arch = config.architecture(d, train_set.classes());
  model.feature_names = train_set.feature_names();
  model.label_names = train_set.label_names();
  model.transform = config.standardize ? Standardizer::fit(train_set.x())
                                       : Standardizer::identity(d);

  const Matrix x = model.transform.apply(train_set.x());
  const Matrix target = reconstruction_target(model, train_set.x());
  if (config.mode == Mode::predictor) model.embeddings = compute_embeddings(x, config.b);
  const FeatureEmbeddings* emb = config.mode == Mode::predictor ? &model.embeddings : nullptr;

  Rng rng(config.seed);
  model.params = init_params(model.arch, config.mode, config.b, rng);
  RmsProp optimizer(config.learning_rate, config.rmsprop_decay, config.rmsprop_epsilon);

  Matrix test_target;
  if (test_set != nullptr) test_target = reconstruction_target(model, test_set->x());

  const Batch batch{x, target, train_set.y()};
  TrainReport report;
  report.epochs.reserve(config.epochs);
  for (std::size_t e = 1; e <= config.epochs; ++e) {
    const double tau = anneal_temperature(e, config.epochs, config.tau0, config.tau_end);
    const EpochNoise noise = draw_epoch_noise(model.arch, x.rows(), config.dropout, rng);
    LossEvaluation eval = evaluate_loss(model.params, model.arch, config.mode, emb, batch, noise, tau,
                                        config.lambda, config.leaky_slope, true);
    if (!std::isfinite(eval.loss.total)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << e << " (tau=" << text::format_double(tau)
          << "): loss is " << eval.loss.total;
      throw DivergenceError(e, tau, msg.str());
    }

    EpochRecord rec;
    rec.epoch = e;
    rec.temperature = tau;
    rec.loss = eval.loss.total;
    rec.classification_loss = eval.loss.classification;
    rec.reconstruction_loss = eval.loss.reconstruction;
    model.selected = unique_argmax(eval.gates.transposed());
    rec.train_accuracy = accuracy_of(predict_labels(model, train_set.x()), train_set.y());
    if (test_set != nullptr) {
      rec.test_accuracy = accuracy_of(predict_labels(model, test_set->x()), test_set->y());
      const Matrix recon = reconstruct_samples(model, test_set->x());
      double sq = 0.0;
      auto a = recon.values();
      auto b = test_target.values();
      for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
      rec.test_reconstruction_error = sq / static_cast<double>(test_set->samples());
    }
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    optimizer.step(model.params, eval.gradients);
  }

  Rng selection_rng(config.inference_seed);
  const ConcreteState final_state = selection_state(model, config.tau_end);
  const GateMatrix final_gates = sample_gates(final_state, selection_rng);
  model.selected = unique_argmax(final_gates.gates.transposed());
  report.selected = model.selected;
  return TrainResult{std::move(model), std::move(report)};
}

}  // namespace fsnet
