#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsnet/data.hpp"
#include "fsnet/embedding.hpp"
#include "fsnet/matrix.hpp"
#include "fsnet/network.hpp"
#include "fsnet/rng.hpp"
#include "fsnet/selection.hpp"

namespace fsnet {

/// Probability floor inside the cross-entropy log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Raised when the training loss stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, double temperature, const std::string& what);
  std::size_t epoch() const { return epoch_; }
  double temperature() const { return temperature_; }

 private:
  std::size_t epoch_;
  double temperature_;
};

struct TrainConfig {
  std::size_t k = 10;
  std::size_t b = 10;
  double lambda = 1.0;
  double learning_rate = 1e-3;
  std::size_t epochs = 4000;
  double tau0 = 10.0;
  double tau_end = 0.01;
  double dropout = 0.2;
  std::uint64_t seed = 0;
  Mode mode = Mode::predictor;
  std::vector<std::size_t> encoder{64, 32, 16};
  std::vector<std::size_t> classifier_hidden{};
  std::vector<std::size_t> decoder{32, 64};
  /// Bias terms on the encoder, classifier and decoder layers.
  bool biases = false;
  double leaky_slope = kDefaultLeakySlope;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  /// z-score inputs with training statistics.
  bool standardize = true;
  /// Reconstruct the untransformed x instead of the standardized one.
  bool raw_target = false;
  /// Seed of the gate sample from which the final feature set is extracted.
  std::uint64_t inference_seed = 1;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
  Architecture architecture(std::size_t features, std::size_t classes) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Everything needed to run or evaluate a trained selector.
struct FsNetModel {
  TrainConfig config;
  Architecture arch;
  Parameters params;
  /// Selected feature indices in extraction order.
  std::vector<std::size_t> selected;
  /// Data-derived state: input transform and (predictor mode) feature embeddings.
  Standardizer transform;
  FeatureEmbeddings embeddings;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  /// File name of the run manifest that produced the model; empty when built in memory.
  std::string manifest;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double temperature = 0.0;
  double loss = 0.0;
  double classification_loss = 0.0;
  double reconstruction_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double test_reconstruction_error = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<std::size_t> selected;
};

struct TrainResult {
  FsNetModel model;
  TrainReport report;
};

/// Random draws consumed by one training epoch.
struct EpochNoise {
  Matrix gumbel;                     // K x d
  std::vector<Matrix> encoder_masks; // one per encoder layer, n x width; empty without dropout
  std::vector<Matrix> classifier_masks;
  std::vector<Matrix> decoder_masks;
};

/// Gumbel noise first, then inverted-dropout masks (entries 0 or 1/(1-rate)).
EpochNoise draw_epoch_noise(const Architecture& arch, std::size_t samples, double dropout, Rng& rng);

struct LossBreakdown {
  double total = 0.0;
  double classification = 0.0;
  double reconstruction = 0.0;
};

/// Inputs shared by every loss evaluation of one batch.
struct Batch {
  const Matrix& x;       // network input (n x d)
  const Matrix& target;  // reconstruction target (n x d)
  std::span<const int> labels;
};

/// Σ CE(y, f(ENC(M x))) + λ Σ ||x − REC(DEC(ENC(M x)))||² for a fixed gate matrix, no dropout.
LossBreakdown loss(const Parameters& params, const Architecture& arch, Mode mode,
                   const FeatureEmbeddings* embeddings, const GateMatrix& gates, const Batch& batch,
                   double lambda, double slope);

struct LossEvaluation {
  LossBreakdown loss;
  Parameters gradients;  // empty matrices when not requested
  Matrix gates;
};

/// Full training-path loss: gates sampled from the parameters with `noise` at `temperature`.
LossEvaluation evaluate_loss(const Parameters& params, const Architecture& arch, Mode mode,
                             const FeatureEmbeddings* embeddings, const Batch& batch,
                             const EpochNoise& noise, double temperature, double lambda,
                             double slope, bool with_gradients);

/// RMSprop: v ← ρ v + (1−ρ) g², w ← w − η g / (√v + ε).
class RmsProp {
 public:
  RmsProp(double learning_rate, double decay, double epsilon);
  void step(Parameters& params, const Parameters& grads);

 private:
  double learning_rate_;
  double decay_;
  double epsilon_;
  std::vector<Matrix> mean_square_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full-batch training for config.epochs epochs. `test`, when given, is only used for
/// the per-epoch test columns of the report.
TrainResult train(const Dataset& train_set, const TrainConfig& config,
                  const Dataset* test_set = nullptr, const EpochCallback& on_epoch = {});

/// Class probabilities (n x |Y|) from the inference path: x^S → encoder → classifier.
/// `x` holds untransformed samples over all d features.
Matrix predict(const FsNetModel& model, const Matrix& x);
std::vector<double> predict(const FsNetModel& model, std::span<const double> x);
/// Argmax with ties to the lowest class.
std::vector<int> predict_labels(const FsNetModel& model, const Matrix& x);
/// Inference-path reconstruction x̂ (n x d) in the target space of the model.
Matrix reconstruct_samples(const FsNetModel& model, const Matrix& x);
/// The reconstruction target of the model for untransformed samples.
Matrix reconstruction_target(const FsNetModel& model, const Matrix& x);

/// Selection probabilities Δ of the trained parameters.
ConcreteState selection_state(const FsNetModel& model, double temperature);

}  // namespace fsnet
