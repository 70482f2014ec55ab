#include <gtest/gtest.h>

#include "mergemix/domain_world.hpp"
#include "mergemix/expert_forge.hpp"
#include "mergemix/theory_probe.hpp"
#include "test_util.hpp"

using namespace mergemix;

TEST(GenerateWorld, Deterministic) {
  const auto f = fixture_toy_net(2, 0.3, 4);
  EXPECT_EQ(generate_world(f.world.domains()), generate_world(f.world.domains()));
}

TEST(GenerateWorld, NoiselessTargetsAreExact) {
  const auto f = fixture_toy_net(2, 0.0, 4);
  const auto& d = f.world.domains()[1];
  const auto& w = d.regression().target_weights;
  const auto data = generate_world({d}).front();
  ASSERT_EQ(data.train.size(), d.train_size);
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const auto& x = data.train.inputs[i];
    for (Eigen::Index o = 0; o < w.rows(); ++o) {
      double y = 0.0;
      for (Eigen::Index c = 0; c < w.cols(); ++c) y += w(o, c) * x[static_cast<std::size_t>(c)];
      EXPECT_EQ(data.train.targets[i][static_cast<std::size_t>(o)], y);
    }
  }
}

TEST(GenerateWorld, QuadraticDomainsHaveNoData) {
  const auto f = fixture_qw2();
  EXPECT_TRUE(f.world.train_data(0).empty());
}

TEST(GenerateWorld, OrthogonalTeachersGiveDissimilarExperts) {
  const auto f = fixture_toy_net(2, 0.0, 7);
  TrainConfig c;
  c.learning_rate = 0.05;
  c.steps = 200;
  c.checkpoint_interval = 200;
  const auto experts = train_all_experts(f.world, f.model, f.base, c);
  EXPECT_LT(task_vector_cosine(experts, f.base)(0, 1), 0.3);
}

TEST(World, RejectsDuplicateNames) {
  const auto d = testutil::quadratic("x", ParameterVector{1.0}, testutil::diag({1}));
  EXPECT_THROW(World({d, d}), InvalidArgument);
}

TEST(World, CapabilitiesDefaultToDomains) {
  const auto f = fixture_qw2();
  EXPECT_EQ(f.world.capability_count(), 2u);
  EXPECT_EQ(f.world.capability_index("d2"), 1u);
  EXPECT_THROW(f.world.capability_index("nope"), InvalidArgument);
}

TEST(EvaluateCapability, RawZeroAtMinimizer) {
  const auto f = fixture_qw2();
  const auto& d = f.world.capabilities()[0];
  const auto s = evaluate_capability(d.quadratic().minimizer, f.model, d, {}, -1.0, 0.0);
  EXPECT_EQ(s.raw, 0.0);
  EXPECT_EQ(s.normalized, 1.0);
}

TEST(EvaluateCapability, TrainedExpertBeatsBase) {
  for (const auto& f : {fixture_qw2(), fixture_qw4(1), fixture_toy_net(2, 0.0, 7)}) {
    TrainConfig c;
    c.learning_rate = 0.05;
    c.steps = 50;
    c.checkpoint_interval = 50;
    const auto experts = train_all_experts(f.world, f.model, f.base, c);
    const auto base_raw = f.world.raw_scores(f.model, f.base);
    for (std::size_t k = 0; k < experts.size(); ++k) {
      EXPECT_GT(f.world.raw_scores(f.model, experts[k].final_params)[k], base_raw[k])
          << f.name << " domain " << k;
    }
  }
}

TEST(Normalization, DegenerateRangeIsHalf) {
  const auto ctx = NormalizationContext::from_population({{-1.0, 2.0}, {-1.0, 3.0}});
  const auto y = ctx.normalize({-1.0, 3.0});
  EXPECT_EQ(y[0], 0.5);
  EXPECT_EQ(y[1], 1.0);
}

TEST(Fixtures, NamedLookup) {
  EXPECT_EQ(fixture_by_name("QW-4").model.param_count(), 8u);
  EXPECT_EQ(fixture_by_name("QW-SEP").world.capability_count(), 2u);
  EXPECT_THROW(fixture_by_name("QW-9"), InvalidArgument);
}

TEST(Fixtures, Qw4DependsOnSeed) {
  const auto a = fixture_qw4(1), b = fixture_qw4(1), c = fixture_qw4(2);
  EXPECT_EQ(a.world.domains()[0].quadratic().minimizer, b.world.domains()[0].quadratic().minimizer);
  EXPECT_NE(a.world.domains()[0].quadratic().minimizer, c.world.domains()[0].quadratic().minimizer);
}
