#include "fsnet/network.hpp"

#include <cmath>
#include <stdexcept>

namespace fsnet {

std::string to_string(Mode mode) { return mode == Mode::predictor ? "predictor" : "dense"; }

Mode parse_mode(const std::string& text) {
  if (text == "predictor") return Mode::predictor;
  if (text == "dense") return Mode::dense;
  throw std::invalid_argument("unknown mode '" + text + "' (expected predictor or dense)");
}

std::size_t Architecture::hidden() const { return encoder.empty() ? selected : encoder.back(); }

std::size_t Architecture::decoder_output() const {
  return decoder.empty() ? hidden() : decoder.back();
}

void Architecture::validate() const {
  auto positive = [](const std::vector<std::size_t>& widths, const char* what) {
    for (std::size_t w : widths)
      if (w == 0) throw std::invalid_argument(std::string("architecture: zero width in ") + what);
  };
  if (inputs == 0) throw std::invalid_argument("architecture: input dimension must be >= 1");
  if (selected == 0) throw std::invalid_argument("architecture: K must be >= 1");
  if (selected > inputs) {
    throw std::invalid_argument("architecture: K=" + std::to_string(selected) +
                                " exceeds feature count d=" + std::to_string(inputs));
  }
  if (classes < 2) throw std::invalid_argument("architecture: need at least 2 classes");
  positive(encoder, "encoder");
  positive(classifier_hidden, "classifier");
  positive(decoder, "decoder");
}

std::size_t Parameters::count() const {
  std::size_t total = 0;
  for (const Matrix* m : all()) total += m->size();
  return total;
}

std::vector<Matrix*> Parameters::all() {
  std::vector<Matrix*> out{&selection};
  for (auto& m : encoder) out.push_back(&m);
  for (auto& m : classifier) out.push_back(&m);
  for (auto& m : decoder) out.push_back(&m);
  out.push_back(&reconstruction);
  for (auto& m : encoder_bias) out.push_back(&m);
  for (auto& m : classifier_bias) out.push_back(&m);
  for (auto& m : decoder_bias) out.push_back(&m);
  return out;
}

std::vector<const Matrix*> Parameters::all() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<Parameters*>(this)->all()) out.push_back(m);
  return out;
}

namespace {

struct Shape {
  std::size_t out;
  std::size_t in;
};

std::vector<Shape> chain(std::size_t input, const std::vector<std::size_t>& widths) {
  std::vector<Shape> shapes;
  for (std::size_t w : widths) {
    shapes.push_back({w, input});
    input = w;
  }
  return shapes;
}

std::vector<Shape> classifier_shapes(const Architecture& arch) {
  std::vector<std::size_t> widths = arch.classifier_hidden;
  widths.push_back(arch.classes);
  return chain(arch.hidden(), widths);
}

Matrix glorot(std::size_t out, std::size_t in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix m(out, in);
  for (double& w : m.values()) w = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

}  // namespace

std::size_t stack_parameter_count(const Architecture& arch) {
  const std::size_t bias = arch.biases ? 1 : 0;
  std::size_t total = 0;
  for (const auto& s : chain(arch.selected, arch.encoder)) total += s.out * (s.in + bias);
  for (const auto& s : classifier_shapes(arch)) total += s.out * (s.in + bias);
  for (const auto& s : chain(arch.hidden(), arch.decoder)) total += s.out * (s.in + bias);
  return total;
}

std::size_t parameter_count(const Architecture& arch, Mode mode, std::size_t b) {
  const std::size_t width = mode == Mode::predictor ? b : arch.inputs;
  return arch.selected * width + arch.decoder_output() * width + stack_parameter_count(arch);
}

Parameters init_params(const Architecture& arch, Mode mode, std::size_t b, Rng& rng) {
  arch.validate();
  if (mode == Mode::predictor && b == 0) {
    throw std::invalid_argument("init_params: embedding size must be >= 1");
  }
  const std::size_t width = mode == Mode::predictor ? b : arch.inputs;
  Parameters p;
  p.selection = glorot(arch.selected, width, rng);
  for (const auto& s : chain(arch.selected, arch.encoder)) p.encoder.push_back(glorot(s.out, s.in, rng));
  for (const auto& s : classifier_shapes(arch)) p.classifier.push_back(glorot(s.out, s.in, rng));
  for (const auto& s : chain(arch.hidden(), arch.decoder)) p.decoder.push_back(glorot(s.out, s.in, rng));
  p.reconstruction = glorot(arch.decoder_output(), width, rng);
  if (arch.biases) {
    for (const auto& s : chain(arch.selected, arch.encoder)) p.encoder_bias.emplace_back(1, s.out);
    for (const auto& s : classifier_shapes(arch)) p.classifier_bias.emplace_back(1, s.out);
    for (const auto& s : chain(arch.hidden(), arch.decoder)) p.decoder_bias.emplace_back(1, s.out);
  }
  return p;
}

namespace graph {

std::vector<ad::Var> ParameterVars::all() const {
  std::vector<ad::Var> out{selection};
  out.insert(out.end(), encoder.begin(), encoder.end());
  out.insert(out.end(), classifier.begin(), classifier.end());
  out.insert(out.end(), decoder.begin(), decoder.end());
  out.push_back(reconstruction);
  out.insert(out.end(), encoder_bias.begin(), encoder_bias.end());
  out.insert(out.end(), classifier_bias.begin(), classifier_bias.end());
  out.insert(out.end(), decoder_bias.begin(), decoder_bias.end());
  return out;
}

ParameterVars record(ad::Tape& tape, const Parameters& params, bool trainable) {
  auto leaf = [&](const Matrix& m) { return trainable ? tape.variable(m) : tape.constant(m); };
  ParameterVars v;
  v.selection = leaf(params.selection);
  for (const auto& m : params.encoder) v.encoder.push_back(leaf(m));
  for (const auto& m : params.classifier) v.classifier.push_back(leaf(m));
  for (const auto& m : params.decoder) v.decoder.push_back(leaf(m));
  v.reconstruction = leaf(params.reconstruction);
  for (const auto& m : params.encoder_bias) v.encoder_bias.push_back(leaf(m));
  for (const auto& m : params.classifier_bias) v.classifier_bias.push_back(leaf(m));
  for (const auto& m : params.decoder_bias) v.decoder_bias.push_back(leaf(m));
  return v;
}

namespace {

ad::Var affine(ad::Var h, std::span<const ad::Var> layers, std::span<const ad::Var> biases,
               std::size_t i) {
  ad::Var z = ad::matmul_nt(h, layers[i]);
  return biases.empty() ? z : ad::add_row(z, biases[i]);
}

}  // namespace

ad::Var hidden_stack(std::span<const ad::Var> layers, std::span<const ad::Var> biases,
                     ad::Var input, double slope, std::span<const Matrix> masks) {
  if (!masks.empty() && masks.size() != layers.size()) {
    throw std::invalid_argument("hidden_stack: mask count does not match layer count");
  }
  if (!biases.empty() && biases.size() != layers.size()) {
    throw std::invalid_argument("hidden_stack: bias count does not match layer count");
  }
  ad::Var h = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = ad::leaky_relu(affine(h, layers, biases, i), slope);
    if (!masks.empty()) h = ad::mask(h, masks[i]);
  }
  return h;
}

ad::Var classifier_head(std::span<const ad::Var> layers, std::span<const ad::Var> biases,
                        ad::Var input, double slope, std::span<const Matrix> masks) {
  if (layers.empty()) throw std::invalid_argument("classifier_head: no output layer");
  if (!biases.empty() && biases.size() != layers.size()) {
    throw std::invalid_argument("classifier_head: bias count does not match layer count");
  }
  const std::size_t last = layers.size() - 1;
  ad::Var h = hidden_stack(layers.first(last), biases.empty() ? biases : biases.first(last), input,
                           slope, masks);
  return ad::softmax_rows(affine(h, layers, biases, last));
}

ad::Var selection_logits(ad::Var selection, Mode mode, const ad::Var* embeddings) {
  if (mode == Mode::dense) return selection;
  if (embeddings == nullptr) throw std::invalid_argument("selection_logits: embeddings required");
  return ad::matmul_nt(selection, *embeddings);
}

ad::Var reconstruction_weights(ad::Var reconstruction, Mode mode, const ad::Var* embeddings) {
  if (mode == Mode::dense) return ad::tanh(reconstruction);
  if (embeddings == nullptr) {
    throw std::invalid_argument("reconstruction_weights: embeddings required");
  }
  return ad::tanh(ad::matmul_nt(reconstruction, *embeddings));
}

}  // namespace graph

namespace {

std::vector<ad::Var> constants(ad::Tape& tape, const std::vector<Matrix>& layers) {
  std::vector<ad::Var> out;
  for (const auto& m : layers) out.push_back(tape.constant(m));
  return out;
}

}  // namespace

Matrix encode(const std::vector<Matrix>& encoder, const Matrix& xs, double slope,
              const std::vector<Matrix>& biases) {
  ad::Tape tape;
  auto layers = constants(tape, encoder);
  auto shifts = constants(tape, biases);
  return tape.value(graph::hidden_stack(layers, shifts, tape.constant(xs), slope));
}

Matrix classify(const std::vector<Matrix>& classifier, const Matrix& h, double slope,
                const std::vector<Matrix>& biases) {
  ad::Tape tape;
  auto layers = constants(tape, classifier);
  auto shifts = constants(tape, biases);
  return tape.value(graph::classifier_head(layers, shifts, tape.constant(h), slope));
}

Matrix decode(const std::vector<Matrix>& decoder, const Matrix& h, double slope,
              const std::vector<Matrix>& biases) {
  return encode(decoder, h, slope, biases);
}

Matrix reconstruct(const Matrix& reconstruction, Mode mode, const FeatureEmbeddings* embeddings,
                   const Matrix& h_tilde) {
  ad::Tape tape;
  ad::Var r = tape.constant(reconstruction);
  ad::Var w;
  if (mode == Mode::predictor) {
    if (embeddings == nullptr) throw std::invalid_argument("reconstruct: embeddings required");
    if (embeddings->size() != reconstruction.cols()) {
      throw std::invalid_argument("reconstruct: predictor is " + reconstruction.shape_string() +
                                  " but embeddings have b=" + std::to_string(embeddings->size()));
    }
    ad::Var phi = tape.constant(embeddings->table());
    w = graph::reconstruction_weights(r, mode, &phi);
  } else {
    w = graph::reconstruction_weights(r, mode, nullptr);
  }
  return tape.value(ad::matmul(tape.constant(h_tilde), w));
}

}  // namespace fsnet
