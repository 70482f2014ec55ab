#include <gtest/gtest.h>

#include "mergemix/consistency.hpp"
#include "mergemix/surface_lab.hpp"

using namespace mergemix;

namespace {

TrainConfig restricted(const Fixture& f) {
  TrainConfig c;
  c.learning_rate = 0.05;
  c.steps = restricted_horizon_steps(f.world, f.model, f.base, 0.05);
  c.checkpoint_interval = c.steps;
  return c;
}

}  // namespace

TEST(RankConsistency, IdenticalScoresGiveOne) {
  const std::vector<double> s{0.3, 0.1, 0.9, 0.5};
  EXPECT_DOUBLE_EQ(spearman(s, s).rho, 1.0);
}

TEST(RankConsistency, Qw2Sweep) {
  const auto f = fixture_qw2();
  const auto r = rank_consistency_experiment(f.world, f.model, f.base, two_domain_sweep(), restricted(f));
  EXPECT_GE(r.correlation.rho, 0.8);
  ASSERT_EQ(r.rows.size(), 9u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.merged_raw.size(), 2u);
    EXPECT_EQ(row.trained_raw.size(), 2u);
  }
}

TEST(RankConsistency, Qw4SampledMixtures) {
  const auto f = fixture_qw4(1);
  const auto r = rank_consistency_experiment(f.world, f.model, f.base, dirichlet_configs(4, 12, 3), restricted(f));
  EXPECT_GE(r.correlation.rho, 0.8);
  EXPECT_EQ(r.rows.size(), 12u);
}

TEST(RankConsistency, NeedsThreeRatios) {
  const auto f = fixture_qw2();
  const std::vector<SimplexWeights> two{SimplexWeights({0.5, 0.5}), SimplexWeights({0.2, 0.8})};
  EXPECT_THROW(rank_consistency_experiment(f.world, f.model, f.base, two, restricted(f)), InvalidArgument);
}

TEST(RankConsistency, SweepValues) {
  const auto s = two_domain_sweep();
  ASSERT_EQ(s.size(), 9u);
  EXPECT_DOUBLE_EQ(s.front()[0], 0.1);
  EXPECT_DOUBLE_EQ(s.back()[0], 0.9);
}
