#include "fsnet/embedding.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fsnet {

FeatureHistogram feature_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("feature_histogram: bin count must be >= 1");
  if (values.empty()) throw std::invalid_argument("feature_histogram: empty feature");

  // Sorted accumulation makes the result independent of sample order.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const double width = (hi - lo) / static_cast<double>(bins);

  std::vector<double> count(bins, 0.0);
  std::vector<double> sum(bins, 0.0);
  for (double v : sorted) {
    std::size_t bin = 0;
    if (width > 0.0) {
      bin = static_cast<std::size_t>((v - lo) / width);
      bin = std::min(bin, bins - 1);
    }
    count[bin] += 1.0;
    sum[bin] += v;
  }

  FeatureHistogram h;
  h.frequency.resize(bins);
  h.mean.resize(bins);
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < bins; ++i) {
    h.frequency[i] = count[i] / n;
    h.mean[i] = count[i] > 0.0 ? sum[i] / count[i]
                               : lo + (static_cast<double>(i) + 0.5) * width;
  }
  return h;
}

FeatureEmbeddings::FeatureEmbeddings(Matrix table) : table_(std::move(table)) {
  if (!table_.all_finite()) throw std::invalid_argument("FeatureEmbeddings: non-finite entry");
}

FeatureEmbeddings compute_embeddings(const Matrix& x, std::size_t b) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("compute_embeddings: empty data matrix");
  if (b < 1 || b > n) {
    throw std::invalid_argument("compute_embeddings: embedding size b=" + std::to_string(b) +
                                " must satisfy 1 <= b <= n=" + std::to_string(n));
  }
  Matrix table(d, b);
  for (std::size_t j = 0; j < d; ++j) {
    const std::vector<double> column = x.column_copy(j);
    const FeatureHistogram h = feature_histogram(column, b);
    for (std::size_t i = 0; i < b; ++i) table(j, i) = h.frequency[i] * h.mean[i];
  }
  return FeatureEmbeddings(std::move(table));
}

}  // namespace fsnet
