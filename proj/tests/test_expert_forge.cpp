#include <gtest/gtest.h>

#include <cmath>

#include "mergemix/expert_forge.hpp"
#include "test_util.hpp"

using namespace mergemix;

namespace {

TrainConfig config(double lr, long long steps, long long interval = 1) {
  TrainConfig c;
  c.learning_rate = lr;
  c.steps = steps;
  c.checkpoint_interval = interval;
  return c;
}

}  // namespace

TEST(TrainExpert, ZeroStepsReturnsBase) {
  const auto f = fixture_qw2();
  const auto a = train_expert(f.world, f.model, f.base, 0, config(0.1, 0));
  EXPECT_EQ(a.final_params, f.base);
  EXPECT_EQ(a.base_digest, digest(f.base));
}

TEST(TrainExpert, OneExactStep) {
  const auto f = fixture_qw2();
  const auto a = train_expert(f.world, f.model, f.base, 0, config(0.1, 1));
  EXPECT_EQ(a.final_params, (ParameterVector{0.1, 0.0}));
}

TEST(TrainExpert, ConvergesToMinimizer) {
  const auto f = fixture_qw2();
  const auto a = train_expert(f.world, f.model, f.base, 0, config(0.1, 200, 50));
  // closed form: mu + (1 - eta)^T (theta0 - mu)
  EXPECT_NEAR(a.final_params[0], 1.0 - std::pow(0.9, 200), 1e-15);
  EXPECT_NEAR(a.final_params[0], 1.0, 1e-6);
  EXPECT_NEAR(a.final_params[1], 0.0, 1e-6);
}

TEST(TrainExpert, CheckpointsAtInterval) {
  const auto f = fixture_qw2();
  const auto a = train_expert(f.world, f.model, f.base, 1, config(0.1, 10, 4));
  std::vector<long long> steps;
  for (const auto& p : a.trajectory) steps.push_back(p.step);
  EXPECT_EQ(steps, (std::vector<long long>{0, 4, 8, 10}));
  EXPECT_EQ(a.trajectory.back().params, a.final_params);
  EXPECT_EQ(a.trajectory.front().scores.size(), 2u);
}

TEST(TrainExpert, DivergenceNamesStep) {
  const auto f = fixture_qw2();
  try {
    train_expert(f.world, f.model, f.base, 1, config(1e155, 5));
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.step(), 1);
  }
}

TEST(TrainExpert, RejectsBadConfig) {
  const auto f = fixture_qw2();
  EXPECT_THROW(train_expert(f.world, f.model, f.base, 0, config(0.0, 5)), InvalidArgument);
  EXPECT_THROW(train_expert(f.world, f.model, f.base, 0, config(0.1, 5, 0)), InvalidArgument);
  EXPECT_THROW(train_expert(f.world, f.model, f.base, 7, config(0.1, 5)), InvalidArgument);
}

TEST(TrainOnMixture, OneHotMatchesExpert) {
  for (const auto& f : {fixture_qw2(), fixture_qw4(1)}) {
    const auto c = config(0.05, 20, 5);
    for (std::size_t k = 0; k < f.world.domain_count(); ++k) {
      const auto e = train_expert(f.world, f.model, f.base, k, c);
      const auto m = train_on_mixture(f.world, f.model, f.base, SimplexWeights::one_hot(f.world.domain_count(), k), c);
      ASSERT_EQ(e.trajectory.size(), m.trajectory.size());
      for (std::size_t i = 0; i < e.trajectory.size(); ++i)
        EXPECT_EQ(e.trajectory[i].params, m.trajectory[i].params);
    }
  }
}

TEST(TrainOnMixture, OneExactStep) {
  const auto f = fixture_qw2();
  const auto m = train_on_mixture(f.world, f.model, f.base, SimplexWeights({0.5, 0.5}), config(0.1, 1));
  EXPECT_EQ(m.final_params, (ParameterVector{0.05, 0.05}));
  EXPECT_EQ(m.domain, "mixture");
  ASSERT_TRUE(m.mixture.has_value());
}

TEST(TrainOnMixture, IdenticalDomainsIgnoreLambda) {
  const auto a = testutil::diag({2.0, 1.0});
  const ParameterVector mu{1.0, 0.5};
  const World w({testutil::quadratic("x", mu, a), testutil::quadratic("y", mu, a)});
  const auto m = ModelSpec::quadratic_world(2);
  const auto c = config(0.05, 30, 10);
  const auto ref = train_on_mixture(w, m, ParameterVector(2), SimplexWeights({0.5, 0.5}), c);
  for (double l : {0.0, 0.1, 0.37, 1.0}) {
    const auto t = train_on_mixture(w, m, ParameterVector(2), SimplexWeights({l, 1.0 - l}), c);
    for (std::size_t i = 0; i < ref.trajectory.size(); ++i)
      EXPECT_EQ(t.trajectory[i].params, ref.trajectory[i].params) << "lambda " << l;
  }
}

TEST(TrainAllExperts, BitIdenticalAcrossThreadCounts) {
  const auto f = fixture_toy_net(3, 0.2, 2);
  auto c = config(0.05, 40, 10);
  c.batch_size = 16;
  c.seed = 9;
  const auto one = train_all_experts(f.world, f.model, f.base, c, 1);
  const auto many = train_all_experts(f.world, f.model, f.base, c, 3);
  for (std::size_t k = 0; k < one.size(); ++k) EXPECT_EQ(one[k].final_params, many[k].final_params);
}

TEST(RestrictedHorizon, Qw2AndQw4) {
  EXPECT_EQ(restricted_horizon_steps(fixture_qw2().world, fixture_qw2().model, fixture_qw2().base, 0.05), 10);
  const auto q = fixture_qw4(1);
  EXPECT_EQ(restricted_horizon_steps(q.world, q.model, q.base, 0.05), 5);
}
