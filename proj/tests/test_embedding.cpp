#include <gtest/gtest.h>

#include <cmath>

#include "fsnet/embedding.hpp"
#include "fsnet/rng.hpp"

namespace fsnet {
namespace {

Matrix single_column(const std::vector<double>& values) { return Matrix::column(values); }

TEST(Embedding, HandComputedExample) {
  const FeatureHistogram hist = feature_histogram(std::vector<double>{1, 1, 2, 4}, 2);
  EXPECT_DOUBLE_EQ(hist.frequency[0], 0.75);
  EXPECT_DOUBLE_EQ(hist.frequency[1], 0.25);
  EXPECT_NEAR(hist.mean[0], 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(hist.mean[1], 4.0);

  const FeatureEmbeddings emb = compute_embeddings(single_column({1, 1, 2, 4}), 2);
  EXPECT_NEAR(emb.row(0)[0], 1.0, 1e-15);
  EXPECT_NEAR(emb.row(0)[1], 1.0, 1e-15);
}

TEST(Embedding, ConstantFeatureUsesBinZero) {
  const FeatureEmbeddings emb = compute_embeddings(single_column({2.5, 2.5, 2.5}), 3);
  EXPECT_DOUBLE_EQ(emb.row(0)[0], 2.5);
  EXPECT_DOUBLE_EQ(emb.row(0)[1], 0.0);
  EXPECT_DOUBLE_EQ(emb.row(0)[2], 0.0);
}

TEST(Embedding, EmptyBinGetsMidpoint) {
  const FeatureHistogram hist = feature_histogram(std::vector<double>{0, 0, 3}, 3);
  EXPECT_DOUBLE_EQ(hist.frequency[1], 0.0);
  EXPECT_DOUBLE_EQ(hist.mean[1], 1.5);
}

TEST(Embedding, MaximumLandsInLastBin) {
  const FeatureHistogram hist = feature_histogram(std::vector<double>{0, 1, 2, 3, 4}, 4);
  EXPECT_DOUBLE_EQ(hist.frequency[3], 0.4);  // 3 and the closed right edge 4
}

TEST(Embedding, ScalingScalesEmbedding) {
  Rng rng(4);
  std::vector<double> u(30);
  for (double& v : u) v = rng.normal();
  std::vector<double> u2 = u;
  for (double& v : u2) v *= 2.0;
  const FeatureEmbeddings a = compute_embeddings(single_column(u), 5);
  const FeatureEmbeddings b = compute_embeddings(single_column(u2), 5);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(b.row(0)[i], 2.0 * a.row(0)[i], 1e-13);
}

TEST(Embedding, FrequenciesSumToOne) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> u(1 + rng.uniform_index(60));
    for (double& v : u) v = rng.normal() * 10.0;
    const std::size_t b = 1 + rng.uniform_index(u.size());
    const FeatureHistogram h = feature_histogram(u, b);
    double sum = 0.0;
    for (double f : h.frequency) sum += f;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Embedding, InvariantToSampleOrder) {
  Rng rng(8);
  Matrix x(40, 6);
  for (double& v : x.values()) v = rng.normal();
  std::vector<std::size_t> order(40);
  for (std::size_t i = 0; i < 40; ++i) order[i] = i;
  shuffle(order, rng);
  Matrix shuffled(40, 6);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 6; ++j) shuffled(i, j) = x(order[i], j);
  EXPECT_EQ(compute_embeddings(x, 7).table(), compute_embeddings(shuffled, 7).table());
}

TEST(Embedding, ShapeIsFeaturesByBins) {
  Matrix x(12, 9);
  const FeatureEmbeddings emb = compute_embeddings(x, 4);
  EXPECT_EQ(emb.features(), 9u);
  EXPECT_EQ(emb.size(), 4u);
  EXPECT_TRUE(emb.table().all_finite());
}

TEST(Embedding, BinCountBounds) {
  Matrix x(5, 2);
  EXPECT_THROW(compute_embeddings(x, 6), std::invalid_argument);
  EXPECT_THROW(compute_embeddings(x, 0), std::invalid_argument);
  EXPECT_NO_THROW(compute_embeddings(x, 5));
}

}  // namespace
}  // namespace fsnet
