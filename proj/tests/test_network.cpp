#include <gtest/gtest.h>

#include <cmath>

#include "fsnet/network.hpp"
#include "fsnet/selection.hpp"

namespace fsnet {
namespace {

Architecture default_arch(std::size_t d) {
  Architecture a;
  a.inputs = d;
  return a;
}

TEST(Architecture, DefaultsChain) {
  const Architecture a = default_arch(100);
  EXPECT_EQ(a.selected, 10u);
  EXPECT_EQ(a.hidden(), 16u);
  EXPECT_EQ(a.decoder_output(), 64u);
  EXPECT_NO_THROW(a.validate());
}

TEST(Architecture, RejectsInvalid) {
  Architecture a = default_arch(5);
  EXPECT_THROW(a.validate(), std::invalid_argument);  // K=10 > d=5
  a = default_arch(50);
  a.encoder = {8, 0};
  EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(ParameterCount, PredictorIndependentOfInputWidth) {
  const std::size_t small = parameter_count(default_arch(4434), Mode::predictor, 10);
  const std::size_t large = parameter_count(default_arch(22283), Mode::predictor, 10);
  EXPECT_EQ(small, large);
}

TEST(ParameterCount, Formula) {
  const Architecture a = default_arch(1000);
  // Stacks: 10·64 + 64·32 + 32·16 + 16·2 + 16·32 + 32·64.
  const std::size_t s = 640 + 2048 + 512 + 32 + 512 + 2048;
  EXPECT_EQ(stack_parameter_count(a), s);
  EXPECT_EQ(parameter_count(a, Mode::predictor, 10), 10 * 10 + 64 * 10 + s);
  EXPECT_EQ(parameter_count(a, Mode::dense, 10), 10 * 1000 + 64 * 1000 + s);
}

TEST(ParameterCount, DenseGrowsByFanPerFeature) {
  const std::size_t a = parameter_count(default_arch(4434), Mode::dense, 10);
  const std::size_t b = parameter_count(default_arch(22283), Mode::dense, 10);
  EXPECT_EQ(b - a, (10u + 64u) * (22283u - 4434u));
}

TEST(ParameterCount, MatchesInitializedParameters) {
  Rng rng(1);
  for (Mode mode : {Mode::predictor, Mode::dense}) {
    for (bool biases : {false, true}) {
      Architecture a = default_arch(123);
      a.biases = biases;
      EXPECT_EQ(init_params(a, mode, 7, rng).count(), parameter_count(a, mode, 7));
    }
  }
}

TEST(Init, DeterministicPerSeed) {
  Rng a(99), b(99);
  const Architecture arch = default_arch(40);
  EXPECT_EQ(init_params(arch, Mode::predictor, 10, a), init_params(arch, Mode::predictor, 10, b));
}

TEST(Init, GlorotBounds) {
  Rng rng(5);
  const Architecture arch = default_arch(40);
  const Parameters p = init_params(arch, Mode::dense, 10, rng);
  for (const Matrix* m : p.all()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m->rows() + m->cols()));
    for (double w : m->values()) EXPECT_LE(std::abs(w), bound);
  }
}

TEST(Init, BiasesStartAtZero) {
  Rng rng(6);
  Architecture arch = default_arch(40);
  arch.biases = true;
  const Parameters p = init_params(arch, Mode::predictor, 10, rng);
  ASSERT_EQ(p.encoder_bias.size(), 3u);
  ASSERT_EQ(p.classifier_bias.size(), 1u);
  ASSERT_EQ(p.decoder_bias.size(), 2u);
  for (const auto& b : p.encoder_bias)
    for (double v : b.values()) EXPECT_EQ(v, 0.0);
}

TEST(Encode, ZeroWeightsGiveZero) {
  const std::vector<Matrix> enc{Matrix(4, 3), Matrix(2, 4)};
  const Matrix h = encode(enc, Matrix{{1, -2, 3}}, 0.2);
  EXPECT_EQ(h, Matrix(1, 2));
}

TEST(Encode, IdentityOnNonnegativeInput) {
  const Matrix xs{{0.5, 2.0, 0.0}};
  EXPECT_EQ(encode({Matrix::identity(3)}, xs, 0.2), xs);
}

TEST(Encode, LeakyOnNegativeInput) {
  const Matrix h = encode({Matrix::identity(2)}, Matrix{{-5.0, 1.0}}, 0.2);
  EXPECT_DOUBLE_EQ(h(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(h(0, 1), 1.0);
}

TEST(Encode, DimensionMismatchThrows) {
  EXPECT_THROW(encode({Matrix(4, 3)}, Matrix(1, 5), 0.2), std::invalid_argument);
}

TEST(Encode, BiasShiftsPreActivation) {
  const std::vector<Matrix> bias{Matrix{{1.0, -1.0}}};
  const Matrix h = encode({Matrix::identity(2)}, Matrix{{0.0, 0.0}}, 0.2, bias);
  EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(h(0, 1), -0.2);
}

TEST(Classify, ZeroWeightsUniform) {
  const Matrix p = classify({Matrix(3, 4)}, Matrix{{1, 2, 3, 4}}, 0.2);
  for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Classify, EqualLogitsHalf) {
  const Matrix w{{1.0, 0.0}, {1.0, 0.0}};
  const Matrix p = classify({w}, Matrix{{3.0, -1.0}}, 0.2);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(Classify, OutputsOnSimplex) {
  Rng rng(3);
  Matrix w1(8, 5), w2(4, 8), h(10, 5);
  for (double& v : w1.values()) v = rng.normal();
  for (double& v : w2.values()) v = rng.normal();
  for (double& v : h.values()) v = 3.0 * rng.normal();
  const Matrix p = classify({w1, w2}, h, 0.2);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double sum = 0.0;
    for (double v : p.row(i)) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Decode, MirrorsEncode) {
  const Matrix xs{{0.5, 2.0}};
  EXPECT_EQ(decode({Matrix::identity(2)}, xs, 0.2), xs);
  EXPECT_EQ(decode({Matrix(3, 2)}, xs, 0.2), Matrix(1, 3));
}

TEST(Reconstruct, ZeroHiddenGivesZero) {
  const FeatureEmbeddings emb(Matrix{{1, 2}, {3, 4}, {5, 6}});
  Matrix w(4, 2, 0.3);
  EXPECT_EQ(reconstruct(w, Mode::predictor, &emb, Matrix(2, 4)), Matrix(2, 3));
}

TEST(Reconstruct, ZeroPredictorGivesZero) {
  const FeatureEmbeddings emb(Matrix{{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(reconstruct(Matrix(4, 2), Mode::predictor, &emb, Matrix(2, 4, 1.0)), Matrix(2, 3));
}

TEST(Reconstruct, RowIsTanhOfPredictedWeights) {
  const FeatureEmbeddings emb(Matrix{{0.5, -1.0}, {2.0, 0.25}});
  const Matrix w{{0.3, 0.1}, {-0.2, 0.4}, {1.0, 1.0}};
  const Matrix h{{1.0, 2.0, -1.0}};
  const Matrix x = reconstruct(w, Mode::predictor, &emb, h);
  for (std::size_t j = 0; j < 2; ++j) {
    double expected = 0.0;
    for (std::size_t r = 0; r < 3; ++r)
      expected += std::tanh(w(r, 0) * emb.row(j)[0] + w(r, 1) * emb.row(j)[1]) * h(0, r);
    EXPECT_NEAR(x(0, j), expected, 1e-14);
  }
}

TEST(Reconstruct, DuplicateFeaturesReconstructIdentically) {
  const FeatureEmbeddings emb(Matrix{{0.5, -1.0}, {2.0, 0.25}, {0.5, -1.0}});
  const Matrix w{{0.3, 0.1}, {-0.2, 0.4}};
  const Matrix x = reconstruct(w, Mode::predictor, &emb, Matrix{{1.5, -0.5}});
  EXPECT_EQ(x(0, 0), x(0, 2));
}

TEST(Reconstruct, LinearInHidden) {
  const FeatureEmbeddings emb(Matrix{{0.5, -1.0}, {2.0, 0.25}});
  const Matrix w{{0.3, 0.1}, {-0.2, 0.4}};
  const Matrix a = reconstruct(w, Mode::predictor, &emb, Matrix{{1.0, 2.0}});
  const Matrix b = reconstruct(w, Mode::predictor, &emb, Matrix{{3.0, 6.0}});
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(b(0, j), 3.0 * a(0, j), 1e-14);
}

TEST(Reconstruct, RequiresMatchingEmbeddings) {
  const FeatureEmbeddings emb(Matrix(3, 2));
  EXPECT_THROW(reconstruct(Matrix(4, 5), Mode::predictor, &emb, Matrix(1, 4)), std::invalid_argument);
  EXPECT_THROW(reconstruct(Matrix(4, 2), Mode::predictor, nullptr, Matrix(1, 4)), std::invalid_argument);
}

}  // namespace
}  // namespace fsnet
