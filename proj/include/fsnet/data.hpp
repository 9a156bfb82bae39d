#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsnet/matrix.hpp"

namespace fsnet {

/// Samples (n x d), integer labels in [0, classes) and optional names.
class Dataset {
 public:
  Dataset() = default;
  /// Throws std::invalid_argument on label/shape mismatch, out-of-range labels or
  /// non-finite values.
  Dataset(Matrix x, std::vector<int> y, std::size_t classes,
          std::vector<std::string> feature_names = {}, std::vector<std::string> label_names = {});

  const Matrix& x() const { return x_; }
  const std::vector<int>& y() const { return y_; }
  std::size_t samples() const { return x_.rows(); }
  std::size_t features() const { return x_.cols(); }
  std::size_t classes() const { return classes_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& label_names() const { return label_names_; }

  std::vector<std::size_t> class_counts() const;
  /// Throws unless every class has at least one sample.
  void require_all_classes() const;

  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_x(Matrix x) const;
  /// Appends copies of the given columns (names get a "_copy" suffix).
  Dataset with_duplicated_columns(std::span<const std::size_t> columns) const;

 private:
  Matrix x_;
  std::vector<int> y_;
  std::size_t classes_ = 0;
  std::vector<std::string> feature_names_;
  std::vector<std::string> label_names_;
};

struct DelimitedOptions {
  char delimiter = ',';
  bool header = true;
  /// Label column index; negative counts from the end (-1 = last column).
  int label_column = -1;
};

/// Parses a delimited table. Label strings are coded in order of first appearance.
/// Errors name the offending line and column.
Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options = {});
/// Writes features then the label column (label names when present, else integer codes).
void write_delimited(const std::filesystem::path& path, const Dataset& data,
                     const DelimitedOptions& options = {});

/// Per-feature z-score fitted on training data. Zero-variance features map to 0.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> scale);

  static Standardizer fit(const Matrix& x);
  static Standardizer identity(std::size_t features);

  Matrix apply(const Matrix& x) const;
  std::vector<double> apply(std::span<const double> x) const;
  /// Transforms coordinate `feature` of a raw value.
  double apply_one(std::size_t feature, double value) const;

  std::size_t features() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  /// Multiplier 1/sd, or 0 for constant features.
  const std::vector<double>& scale() const { return scale_; }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

struct Standardized {
  Dataset train;
  Dataset test;
  Standardizer transform;
};

Standardized standardize(const Dataset& train, const Dataset& test);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded random split; both index lists come back sorted.
SplitIndices split_indices(const Dataset& data, const SplitSpec& spec);
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

struct SyntheticDataset {
  Dataset data;
  std::vector<std::size_t> planted;  // ascending
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k_star = 0;
  std::uint64_t seed = 0;
};

/// X ~ N(0, 1); y = 1 iff Σ_{j planted} sin(x_j) + x_j² exceeds its sample median.
SyntheticDataset make_synthetic(std::size_t n, std::size_t d, std::size_t k_star,
                                std::uint64_t seed);

/// Echo file: n, d, k_star, seed and the planted indices.
void write_planted(const std::filesystem::path& path, const SyntheticDataset& synthetic);
std::vector<std::size_t> read_planted(const std::filesystem::path& path);

}  // namespace fsnet
