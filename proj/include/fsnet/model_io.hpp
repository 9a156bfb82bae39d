#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fsnet/trainer.hpp"

namespace fsnet {

/// Malformed model, preprocessing or report file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kModelFormatVersion = 1;

// A model is stored as two text files:
//
//   model file          "fsnet-model 1" header of key=value lines (configuration,
//                       architecture, binning convention, leaky slope, seeds, labels,
//                       manifest reference), then `block <name> <rows> <cols>` weight
//                       blocks with one row per line, then `selected=` and `end`.
//   preprocessing file  "fsnet-preprocessing 1": feature names, the input transform
//                       and (predictor mode) the d x b embedding table.
//
// Only the model file holds trainable parameters, so its size is what the
// compression ratio compares. Doubles are written in shortest round-trip form and
// read back bit-exactly.

std::string serialize_model(const FsNetModel& model);
/// Parses the parameter file. Preprocessing fields stay empty.
FsNetModel parse_model(std::string_view content);

std::string serialize_preprocessing(const FsNetModel& model);
/// Fills transform, embeddings and feature names of `model`.
void parse_preprocessing(std::string_view content, FsNetModel& model);

/// Path of the preprocessing file belonging to a model path.
std::filesystem::path preprocessing_path(const std::filesystem::path& model_path);

/// Writes both files; each goes to a temporary name first and is renamed into place.
void save_model(const std::filesystem::path& model_path, const FsNetModel& model);
/// Loads the model file and, when `require_preprocessing` or the file exists, its sidecar.
FsNetModel load_model(const std::filesystem::path& model_path, bool require_preprocessing = true);

/// Per-epoch report as a tab-separated table with a header row.
std::string format_train_report(const TrainReport& report);

std::string read_file(const std::filesystem::path& path);
/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace fsnet
