#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fsnet/matrix.hpp"

namespace fsnet {

/// Histogram summary of one feature column over `b` equal-width bins.
struct FeatureHistogram {
  std::vector<double> frequency;  // count / n
  std::vector<double> mean;       // mean of bin members; bin midpoint when empty
};

/// Equal-width bins over [min, max]; the last bin is closed at max.
/// A zero-width range puts every value in bin 0.
FeatureHistogram feature_histogram(std::span<const double> values, std::size_t bins);

/// Per-feature embedding table: row j is frequency ⊙ mean of feature j's histogram.
class FeatureEmbeddings {
 public:
  FeatureEmbeddings() = default;
  explicit FeatureEmbeddings(Matrix table);

  std::size_t features() const { return table_.rows(); }
  std::size_t size() const { return table_.cols(); }
  const Matrix& table() const { return table_; }
  std::span<const double> row(std::size_t j) const { return table_.row(j); }

 private:
  Matrix table_;  // d x b
};

/// Embeds every column of `x` (n x d). Requires 1 <= b <= n.
FeatureEmbeddings compute_embeddings(const Matrix& x, std::size_t b);

}  // namespace fsnet
