#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fsnet/data.hpp"
#include "fsnet/matrix.hpp"
#include "fsnet/network.hpp"
#include "fsnet/trainer.hpp"

namespace fsnet {

inline constexpr std::size_t kDefaultMiBins = 10;

struct EvalReport {
  double accuracy = 0.0;
  double recon_error = 0.0;
  double avg_mi = 0.0;
  std::size_t mi_bins = kDefaultMiBins;
  std::size_t param_count_predictor = 0;
  std::size_t param_count_dense = 0;
  double compression_ratio = 0.0;
  /// Serialized dense-model size over serialized predictor-model size.
  double file_size_ratio = 0.0;
  std::size_t test_samples = 0;
  std::size_t selected = 0;
  /// File name of the run manifest; empty when computed in memory.
  std::string manifest;
};

/// Keys written by write_eval_report, in order.
const std::vector<std::string>& eval_report_keys();
/// One `key=value` line per metric.
std::string format_eval_report(const EvalReport& report);
void write_eval_report(const std::filesystem::path& path, const EvalReport& report);

/// Fraction of samples whose argmax prediction (ties to the lowest class) is correct.
double accuracy(const FsNetModel& model, const Dataset& test);
/// (1/n) Σ ||target_i − x̂_i||² on the inference path.
double reconstruction_error(const FsNetModel& model, const Dataset& test);

/// Plug-in mutual information (nats) on a bins x bins equal-width joint histogram,
/// clamped at zero.
double mutual_information(std::span<const double> a, std::span<const double> b, std::size_t bins);
/// 2 / (K(K−1)) Σ_{i<j} I(X_{S_i}, X_{S_j}). Repeated indices are paired like any other.
double avg_mutual_information(const Matrix& x, std::span<const std::size_t> selected,
                              std::size_t bins = kDefaultMiBins);

/// (dK + h'd + s) / (bK + h'b + s) with s the encoder/classifier/decoder parameter count.
double compression_ratio(const Architecture& arch, std::size_t d, std::size_t b);

/// Dense over predictor serialized size for the model's architecture, measured by
/// serializing freshly initialized parameters of both kinds.
double measured_size_ratio(const Architecture& arch, std::size_t b);

EvalReport evaluate(const FsNetModel& model, const Dataset& test, std::size_t mi_bins = kDefaultMiBins);

}  // namespace fsnet
