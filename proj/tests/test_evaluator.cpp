#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fsnet/data.hpp"
#include "fsnet/evaluator.hpp"
#include "fsnet/rng.hpp"

namespace fsnet {
namespace {

TEST(MutualInformation, IdenticalVariablesGiveEntropy) {
  // Four equally likely values spread over four bins: I(X;X) = H(X) = ln 4.
  std::vector<double> a;
  for (int r = 0; r < 25; ++r)
    for (double v : {0.0, 1.0, 2.0, 3.0}) a.push_back(v);
  EXPECT_NEAR(mutual_information(a, a, 4), std::log(4.0), 1e-12);
}

TEST(MutualInformation, IndependentProductIsZero) {
  std::vector<double> a, b;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      a.push_back(i);
      b.push_back(j);
    }
  EXPECT_NEAR(mutual_information(a, b, 4), 0.0, 1e-15);
}

TEST(MutualInformation, SymmetricAndNonnegative) {
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> a(100), b(100);
    for (std::size_t i = 0; i < 100; ++i) {
      a[i] = rng.normal();
      b[i] = a[i] * rng.uniform() + rng.normal();
    }
    const double ab = mutual_information(a, b, 8);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, mutual_information(b, a, 8), 1e-12);
  }
}

TEST(MutualInformation, ConstantVariableCarriesNothing) {
  const std::vector<double> a(10, 3.0);
  const std::vector<double> b{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(mutual_information(a, b, 5), 0.0);
}

TEST(MutualInformation, RejectsBadInput) {
  const std::vector<double> a{1, 2};
  const std::vector<double> b{1};
  EXPECT_THROW(mutual_information(a, b, 3), std::invalid_argument);
  EXPECT_THROW(mutual_information(a, a, 0), std::invalid_argument);
}

TEST(AverageMutualInformation, PairAverage) {
  Rng rng(6);
  Matrix x(200, 3);
  for (double& v : x.values()) v = rng.normal();
  const std::vector<std::size_t> s{0, 1, 2};
  const double expected = (mutual_information(x.column_copy(0), x.column_copy(1), 10) +
                           mutual_information(x.column_copy(0), x.column_copy(2), 10) +
                           mutual_information(x.column_copy(1), x.column_copy(2), 10)) /
                          3.0;
  EXPECT_NEAR(avg_mutual_information(x, s), expected, 1e-14);
}

TEST(AverageMutualInformation, RepeatedIndexRaisesRedundancy) {
  Rng rng(7);
  Matrix x(500, 4);
  for (double& v : x.values()) v = rng.normal();
  const std::vector<std::size_t> distinct{0, 1, 2};
  const std::vector<std::size_t> repeated{0, 0, 2};
  EXPECT_LT(avg_mutual_information(x, distinct), avg_mutual_information(x, repeated));
}

TEST(CompressionRatio, MatchesParameterCounts) {
  Architecture a;
  a.inputs = 7129;
  const double ratio = compression_ratio(a, 7129, 10);
  EXPECT_NEAR(ratio,
              static_cast<double>(parameter_count(a, Mode::dense, 10)) /
                  static_cast<double>(parameter_count(a, Mode::predictor, 10)),
              1e-12);
  EXPECT_GT(ratio, 80.0);
}

TEST(CompressionRatio, GrowsLinearlyInInputWidth) {
  Architecture a;
  a.inputs = 1000;
  const double r1 = compression_ratio(a, 1000, 10);
  const double r2 = compression_ratio(a, 2000, 10);
  const double r3 = compression_ratio(a, 3000, 10);
  EXPECT_NEAR(r3 - r2, r2 - r1, 1e-9);
  EXPECT_GT(r2, r1);
}

TEST(MeasuredSizeRatio, ExceedsFloorAtLargeWidth) {
  Architecture a;
  a.inputs = 7129;
  EXPECT_GT(measured_size_ratio(a, 10), 20.0);
}

TEST(EvalReport, FixedKeySchema) {
  EvalReport r;
  std::istringstream in(format_eval_report(r));
  std::string line;
  std::vector<std::string> keys;
  while (std::getline(in, line)) keys.push_back(line.substr(0, line.find('=')));
  EXPECT_EQ(keys, eval_report_keys());
  EXPECT_EQ(keys.front(), "accuracy");
}

TEST(Evaluate, ConsistentWithParts) {
  const SyntheticDataset s = make_synthetic(60, 12, 3, 2);
  TrainConfig c;
  c.k = 4;
  c.b = 5;
  c.epochs = 20;
  const TrainResult r = train(s.data, c);
  const EvalReport rep = evaluate(r.model, s.data);
  EXPECT_EQ(rep.accuracy, accuracy(r.model, s.data));
  EXPECT_EQ(rep.recon_error, reconstruction_error(r.model, s.data));
  EXPECT_EQ(rep.avg_mi, avg_mutual_information(s.data.x(), r.model.selected));
  EXPECT_EQ(rep.test_samples, 60u);
  EXPECT_EQ(rep.selected, 4u);
  EXPECT_EQ(format_eval_report(rep), format_eval_report(evaluate(r.model, s.data)));
}

}  // namespace
}  // namespace fsnet
