#include <gtest/gtest.h>

#include <cmath>

#include "mergemix/boosted_trees.hpp"
#include "mergemix/errors.hpp"

using namespace mergemix;

TEST(BoostedEnsemble, ConstantTarget) {
  const std::vector<std::vector<double>> rows{{0.0}, {0.3}, {0.6}, {1.0}};
  const std::vector<double> y(4, 0.42);
  const auto e = BoostedEnsemble::fit(rows, y, BoostingParams{});
  for (double x : {0.0, 0.17, 0.5, 0.99}) {
    const std::vector<double> q{x};
    EXPECT_DOUBLE_EQ(e.predict(q), 0.42);
  }
}

TEST(BoostedEnsemble, SplitsAtMidpoints) {
  const std::vector<std::vector<double>> rows{{0.0}, {0.25}, {0.5}, {0.75}};
  const std::vector<double> y{0, 0, 1, 1};
  BoostingParams p;
  p.trees = 1;
  p.max_depth = 1;
  p.shrinkage = 1.0;
  const auto e = BoostedEnsemble::fit(rows, y, p);
  ASSERT_EQ(e.trees().size(), 1u);
  EXPECT_EQ(e.trees()[0].nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(e.trees()[0].nodes[0].threshold, 0.375);
}

TEST(BoostedEnsemble, FitsStepFunction) {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({i / 19.0, 0.5});
    y.push_back(i < 10 ? -1.0 : 2.0);
  }
  const auto e = BoostedEnsemble::fit(rows, y, BoostingParams{});
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(e.predict(rows[i]), y[i], 1e-3);
}

TEST(BoostedEnsemble, Deterministic) {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    const double a = std::fmod(i * 0.618, 1.0), b = std::fmod(i * 0.382, 1.0);
    rows.push_back({a, b});
    y.push_back(std::sin(3 * a) + b * b);
  }
  EXPECT_EQ(BoostedEnsemble::fit(rows, y, BoostingParams{}), BoostedEnsemble::fit(rows, y, BoostingParams{}));
}

TEST(BoostedEnsemble, RejectsBadInput) {
  const std::vector<std::vector<double>> rows{{0.0}, {1.0, 2.0}};
  const std::vector<double> y{1, 2};
  EXPECT_THROW(BoostedEnsemble::fit(rows, y, BoostingParams{}), Error);
  BoostingParams p;
  p.shrinkage = 0.0;
  EXPECT_THROW(p.validate(), Error);
}
