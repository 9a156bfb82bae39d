#include "fsnet/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fsnet/model_io.hpp"
#include "fsnet/text.hpp"

namespace fsnet {

const std::vector<std::string>& eval_report_keys() {
  static const std::vector<std::string> keys{
      "accuracy",          "recon_error",       "avg_mi",          "mi_bins",
      "param_count_predictor", "param_count_dense", "compression_ratio", "file_size_ratio",
      "test_samples",      "selected",          "manifest"};
  return keys;
}

std::string format_eval_report(const EvalReport& r) {
  std::ostringstream out;
  out << "accuracy=" << text::format_double(r.accuracy) << "\n"
      << "recon_error=" << text::format_double(r.recon_error) << "\n"
      << "avg_mi=" << text::format_double(r.avg_mi) << "\n"
      << "mi_bins=" << r.mi_bins << "\n"
      << "param_count_predictor=" << r.param_count_predictor << "\n"
      << "param_count_dense=" << r.param_count_dense << "\n"
      << "compression_ratio=" << text::format_double(r.compression_ratio) << "\n"
      << "file_size_ratio=" << text::format_double(r.file_size_ratio) << "\n"
      << "test_samples=" << r.test_samples << "\n"
      << "selected=" << r.selected << "\n"
      << "manifest=" << r.manifest << "\n";
  return out.str();
}

void write_eval_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << format_eval_report(report);
}

double accuracy(const FsNetModel& model, const Dataset& test) {
  if (test.samples() == 0) throw std::invalid_argument("accuracy: empty test set");
  const auto predicted = predict_labels(model, test.x());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test.y()[i];
  return static_cast<double>(correct) / static_cast<double>(test.samples());
}

double reconstruction_error(const FsNetModel& model, const Dataset& test) {
  if (test.samples() == 0) throw std::invalid_argument("reconstruction_error: empty test set");
  const Matrix x_hat = reconstruct_samples(model, test.x());
  const Matrix target = reconstruction_target(model, test.x());
  double total = 0.0;
  auto a = x_hat.values();
  auto b = target.values();
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total / static_cast<double>(test.samples());
}

namespace {

std::vector<std::size_t> bin_codes(std::span<const double> v, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(bins);
  std::vector<std::size_t> codes(v.size(), 0);
  if (width > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i)
      codes[i] = std::min(static_cast<std::size_t>((v[i] - lo) / width), bins - 1);
  }
  return codes;
}

}  // namespace

double mutual_information(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.size() != b.size()) throw std::invalid_argument("mutual_information: length mismatch");
  if (a.empty()) throw std::invalid_argument("mutual_information: empty input");
  if (bins < 1) throw std::invalid_argument("mutual_information: bins must be >= 1");
  const auto ca = bin_codes(a, bins);
  const auto cb = bin_codes(b, bins);
  std::vector<std::size_t> joint(bins * bins, 0);
  std::vector<std::size_t> ma(bins, 0);
  std::vector<std::size_t> mb(bins, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[ca[i] * bins + cb[i]];
    ++ma[ca[i]];
    ++mb[cb[i]];
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i)
    for (std::size_t j = 0; j < bins; ++j) {
      const auto c = static_cast<double>(joint[i * bins + j]);
      if (c > 0.0) {
        mi += (c / n) * std::log(c * n / (static_cast<double>(ma[i]) * static_cast<double>(mb[j])));
      }
    }
  return std::max(mi, 0.0);
}

double avg_mutual_information(const Matrix& x, std::span<const std::size_t> selected,
                              std::size_t bins) {
  const std::size_t k = selected.size();
  if (k < 2) throw std::invalid_argument("avg_mutual_information: need at least 2 features");
  std::vector<std::vector<double>> columns;
  columns.reserve(k);
  for (std::size_t j : selected) {
    if (j >= x.cols()) throw std::out_of_range("avg_mutual_information: feature index out of range");
    columns.push_back(x.column_copy(j));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) total += mutual_information(columns[i], columns[j], bins);
  return 2.0 * total / (static_cast<double>(k) * static_cast<double>(k - 1));
}

double compression_ratio(const Architecture& arch, std::size_t d, std::size_t b) {
  const double s = static_cast<double>(stack_parameter_count(arch));
  const double fan = static_cast<double>(arch.selected + arch.decoder_output());
  return (fan * static_cast<double>(d) + s) / (fan * static_cast<double>(b) + s);
}

double measured_size_ratio(const Architecture& arch, std::size_t b) {
  auto serialized_size = [&](Mode mode) {
    FsNetModel m;
    m.config.mode = mode;
    m.config.k = arch.selected;
    m.config.b = b;
    m.config.encoder = arch.encoder;
    m.config.classifier_hidden = arch.classifier_hidden;
    m.config.decoder = arch.decoder;
    m.config.biases = arch.biases;
    m.arch = arch;
    Rng rng(0);
    m.params = init_params(arch, mode, b, rng);
    m.selected.resize(arch.selected);
    for (std::size_t i = 0; i < arch.selected; ++i) m.selected[i] = i;
    return static_cast<double>(serialize_model(m).size());
  };
  return serialized_size(Mode::dense) / serialized_size(Mode::predictor);
}

EvalReport evaluate(const FsNetModel& model, const Dataset& test, std::size_t mi_bins) {
  EvalReport r;
  r.accuracy = accuracy(model, test);
  r.recon_error = reconstruction_error(model, test);
  r.avg_mi = model.selected.size() >= 2 ? avg_mutual_information(test.x(), model.selected, mi_bins) : 0.0;
  r.mi_bins = mi_bins;
  const std::size_t b = model.config.b;
  r.param_count_predictor = parameter_count(model.arch, Mode::predictor, b);
  r.param_count_dense = parameter_count(model.arch, Mode::dense, b);
  r.compression_ratio = compression_ratio(model.arch, model.arch.inputs, b);
  r.file_size_ratio = measured_size_ratio(model.arch, b);
  r.test_samples = test.samples();
  r.selected = model.selected.size();
  return r;
}

}  // namespace fsnet
