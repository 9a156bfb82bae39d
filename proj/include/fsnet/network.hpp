#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fsnet/embedding.hpp"
#include "fsnet/matrix.hpp"
#include "fsnet/rng.hpp"
#include "fsnet/tape.hpp"

namespace fsnet {

inline constexpr double kDefaultLeakySlope = 0.2;

/// Where the two d-wide layers get their weights from.
///   predictor: tiny networks over feature embeddings (K x b and h' x b parameters)
///   dense:     the K x d logits and h' x d reconstruction pre-activations are learned directly
enum class Mode { predictor, dense };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

/// Layer widths of [d -> K -> encoder... (-> classifier... -> |Y|) -> decoder... -> d].
struct Architecture {
  std::size_t inputs = 0;    // d
  std::size_t selected = 10; // K
  std::vector<std::size_t> encoder{64, 32, 16};
  std::vector<std::size_t> classifier_hidden{};
  std::size_t classes = 2;
  std::vector<std::size_t> decoder{32, 64};
  /// Per-unit bias on every encoder, classifier and decoder layer.
  bool biases = false;

  /// Width of the encoder output h.
  std::size_t hidden() const;
  /// Width h' of the decoder output feeding the reconstruction layer.
  std::size_t decoder_output() const;
  /// Throws std::invalid_argument when a width is zero or K > d.
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// All trainable weights. Stack matrices are stored out x in.
struct Parameters {
  Matrix selection;       // K x b (predictor) or K x d (dense)
  std::vector<Matrix> encoder;
  std::vector<Matrix> classifier;
  std::vector<Matrix> decoder;
  Matrix reconstruction;  // h' x b (predictor) or h' x d (dense)
  // 1 x out rows, one per layer of the matching stack; empty without biases.
  std::vector<Matrix> encoder_bias;
  std::vector<Matrix> classifier_bias;
  std::vector<Matrix> decoder_bias;

  std::size_t count() const;
  /// Every matrix in a fixed order: selection, encoder..., classifier..., decoder...,
  /// reconstruction, then the encoder, classifier and decoder biases.
  std::vector<Matrix*> all();
  std::vector<const Matrix*> all() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// |θe| + |θc| + |θd|, biases included when enabled.
std::size_t stack_parameter_count(const Architecture& arch);
/// Trainable parameters for the given mode; `b` is ignored in dense mode.
std::size_t parameter_count(const Architecture& arch, Mode mode, std::size_t b);

/// Glorot-uniform initialization, bound sqrt(6 / (fan_in + fan_out)); biases start at zero.
Parameters init_params(const Architecture& arch, Mode mode, std::size_t b, Rng& rng);

// Batched forward passes; rows of every input are samples.
// `biases` is empty or holds one 1 x out row per layer.
Matrix encode(const std::vector<Matrix>& encoder, const Matrix& xs, double slope,
              const std::vector<Matrix>& biases = {});
Matrix classify(const std::vector<Matrix>& classifier, const Matrix& h, double slope,
                const std::vector<Matrix>& biases = {});
Matrix decode(const std::vector<Matrix>& decoder, const Matrix& h, double slope,
              const std::vector<Matrix>& biases = {});
/// x̂ = h̃ · W_rᵀ with W_rᵀ = tanh(reconstruction · φᵀ) (predictor) or tanh(reconstruction) (dense).
Matrix reconstruct(const Matrix& reconstruction, Mode mode, const FeatureEmbeddings* embeddings,
                   const Matrix& h_tilde);

namespace graph {

struct ParameterVars {
  ad::Var selection;
  std::vector<ad::Var> encoder;
  std::vector<ad::Var> classifier;
  std::vector<ad::Var> decoder;
  ad::Var reconstruction;
  std::vector<ad::Var> encoder_bias;
  std::vector<ad::Var> classifier_bias;
  std::vector<ad::Var> decoder_bias;

  std::vector<ad::Var> all() const;
};

ParameterVars record(ad::Tape& tape, const Parameters& params, bool trainable);

/// Successive leakyReLU layers. `biases` and `masks` are empty or hold one entry per layer.
ad::Var hidden_stack(std::span<const ad::Var> layers, std::span<const ad::Var> biases,
                     ad::Var input, double slope, std::span<const Matrix> masks = {});
/// Hidden leakyReLU layers followed by a softmax output layer. `masks` covers the hidden layers.
ad::Var classifier_head(std::span<const ad::Var> layers, std::span<const ad::Var> biases,
                        ad::Var input, double slope, std::span<const Matrix> masks = {});
/// K x d selection logits: predictor · φᵀ, or the dense logits themselves.
ad::Var selection_logits(ad::Var selection, Mode mode, const ad::Var* embeddings);
/// h' x d transposed reconstruction weights.
ad::Var reconstruction_weights(ad::Var reconstruction, Mode mode, const ad::Var* embeddings);

}  // namespace graph

}  // namespace fsnet
