#include <gtest/gtest.h>

#include <random>

#include "mergemix/surface_lab.hpp"
#include "mergemix/theory_probe.hpp"
#include "test_util.hpp"

using namespace mergemix;

namespace {

void expect_near(const ParameterVector& a, const ParameterVector& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "coordinate " << i;
}

World identical_world() {
  const auto a = testutil::diag({2.0, 1.0});
  const ParameterVector mu{1.0, 0.5};
  return World({testutil::quadratic("x", mu, a), testutil::quadratic("y", mu, a)});
}

}  // namespace

TEST(PredictMix, VanishingHorizonReturnsExpansionPoint) {
  const auto f = fixture_qw2();
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 1e-14);
  expect_near(predict_mix_params(ctx, SimplexWeights({0.3, 0.7})), f.base, 1e-13);
  EXPECT_THROW(make_taylor_context(f.world, f.model, f.base, 0.0), InvalidArgument);
}

TEST(PredictMix, Qw2HandValues) {
  const auto f = fixture_qw2();
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.1);
  // sum lambda_k lambda_j H_k g_j = (-0.75, -0.5); second-order term enters with +1/2 (hT)^2
  expect_near(predict_mix_params(ctx, SimplexWeights({0.5, 0.5})), ParameterVector{0.04625, 0.0475}, 1e-15);
}

TEST(PredictMix, SingleDomain) {
  const World w({testutil::quadratic("d", ParameterVector{1.0, 0.0}, testutil::diag({1, 1}))});
  const auto m = ModelSpec::quadratic_world(2);
  const auto ctx = make_taylor_context(w, m, ParameterVector(2), 0.1);
  // 0.1 - 1/2 (0.1)^2 = 0.095 with the + sign on the second-order term
  expect_near(predict_mix_params(ctx, SimplexWeights({1.0})), ParameterVector{0.095, 0.0}, 1e-15);
}

TEST(PredictMerge, Qw2HandValues) {
  const auto f = fixture_qw2();
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.1);
  expect_near(predict_merge_params(ctx, SimplexWeights({0.5, 0.5})), ParameterVector{0.0475, 0.0475}, 1e-15);
}

TEST(PredictMerge, OneHotMatchesMix) {
  const auto f = fixture_qw4(1);
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.3);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto l = SimplexWeights::one_hot(4, k);
    EXPECT_EQ(predict_merge_params(ctx, l), predict_mix_params(ctx, l));
  }
}

TEST(PredictMerge, IdenticalDomainsMatchMix) {
  const auto w = identical_world();
  const auto ctx = make_taylor_context(w, ModelSpec::quadratic_world(2), ParameterVector(2), 0.4);
  const SimplexWeights l({0.3, 0.7});
  EXPECT_EQ(discrepancy_delta(ctx, l).delta, ParameterVector(2));
  expect_near(predict_merge_params(ctx, l), predict_mix_params(ctx, l), 1e-15);
}

TEST(Discrepancy, OneHotIsZero) {
  const auto f = fixture_qw2();
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.1);
  for (std::size_t k = 0; k < 2; ++k)
    EXPECT_EQ(discrepancy_delta(ctx, SimplexWeights::one_hot(2, k)).delta, ParameterVector(2));
}

TEST(Discrepancy, IdenticalDomainsAnyLambda) {
  const auto w = identical_world();
  const auto ctx = make_taylor_context(w, ModelSpec::quadratic_world(2), ParameterVector(2), 0.4);
  for (double l : {0.1, 0.25, 0.5, 0.9}) EXPECT_EQ(discrepancy_delta(ctx, SimplexWeights({l, 1 - l})).delta, ParameterVector(2));
}

TEST(Discrepancy, Qw2HandValues) {
  const auto f = fixture_qw2();
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.1);
  const auto d = discrepancy_delta(ctx, SimplexWeights({0.5, 0.5}));
  expect_near(d.cross, 0.005 * ParameterVector{-0.5, -0.25}, 1e-15);
  expect_near(d.self, 0.005 * ParameterVector{0.25, 0.25}, 1e-15);
  expect_near(d.delta, ParameterVector{-0.00125, 0.0}, 1e-15);
}

TEST(Discrepancy, IdentityHoldsForRandomDraws) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int i = 0; i < 50; ++i) {
    const auto f = i % 2 ? fixture_qw4(1) : fixture_qw2();
    const auto ctx = make_taylor_context(f.world, f.model, f.base, u(rng));
    const auto l = dirichlet_configs(f.world.domain_count(), 1, 100 + i).front();
    const auto d = discrepancy_delta(ctx, l);
    const auto mix = predict_mix_params(ctx, l), mrg = predict_merge_params(ctx, l);
    for (std::size_t p = 0; p < mix.size(); ++p) EXPECT_LE(std::abs(mix[p] - mrg[p] - d.delta[p]), 1e-12);
  }
}

TEST(ValidateOrder, IdenticalDomainsHaveNoError) {
  const auto w = identical_world();
  const auto r = validate_order(w, ModelSpec::quadratic_world(2), ParameterVector(2), SimplexWeights({0.3, 0.7}), 0.2, 200);
  // zero up to the rounding of lambda-weighted sums
  for (const auto& p : r.points) {
    EXPECT_LE(p.error, 1e-15);
    EXPECT_EQ(p.delta_norm, 0.0);
  }
}

TEST(ValidateOrder, Qw2Scaling) {
  const auto f = fixture_qw2();
  const auto r = validate_order(f.world, f.model, f.base, SimplexWeights({0.5, 0.5}), 0.2, 2000);
  ASSERT_TRUE(r.error_ratio && r.residual_ratio);
  EXPECT_GE(*r.error_ratio, 3.2);
  EXPECT_LE(*r.error_ratio, 4.8);
  EXPECT_GE(*r.residual_ratio, 6.0);
  EXPECT_LE(*r.residual_ratio, 10.0);
}

TEST(ValidateOrder, QuadraticOnly) {
  const auto f = fixture_toy_net();
  EXPECT_THROW(validate_order(f.world, f.model, f.base, SimplexWeights({0.5, 0.5}), 0.2, 10), InvalidArgument);
}

TEST(Gamma, Qw2Analytic) {
  const auto f = fixture_qw2();
  const auto g = gamma_matrix(make_taylor_context(f.world, f.model, f.base, 0.1));
  EXPECT_NEAR(g.gamma(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(g.gamma(0, 1), 1.0, 1e-10);
  EXPECT_NEAR(g.gamma(1, 0), 2.0, 1e-10);
  EXPECT_NEAR(g.gamma(1, 1), 1.0, 1e-10);
}

TEST(Gamma, SharedIsotropicHessianAllOnes) {
  const auto a = testutil::diag({3.0, 3.0});
  const World w({testutil::quadratic("x", ParameterVector{1.0, 0.0}, a),
                 testutil::quadratic("y", ParameterVector{0.0, 1.0}, a),
                 testutil::quadratic("z", ParameterVector{1.0, 1.0}, a)});
  const auto g = gamma_matrix(make_taylor_context(w, ModelSpec::quadratic_world(2), ParameterVector(2), 0.1));
  EXPECT_TRUE(g.gamma.isApprox(Eigen::MatrixXd::Ones(3, 3), 1e-12));
}

TEST(Gamma, ToyNetDiagonalAndStepStability) {
  const auto f = fixture_toy_net(2, 0.0, 7);
  const auto g = gamma_matrix(make_taylor_context(f.world, f.model, f.base, 0.5));
  for (Eigen::Index k = 0; k < 2; ++k) EXPECT_EQ(g.gamma(k, k), 1.0);
  // the finite-difference self-response barely moves when the step halves
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.5);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto u = (1.0 / norm2(ctx.gradients[k])) * ctx.gradients[k];
    const double eps = default_fd_step(f.base);
    const auto& dom = f.world.domains()[k];
    const auto& data = f.world.train_data(k);
    const double r1 = norm2(hvp({f.model, dom, data, f.base, u, eps}));
    const double r2 = norm2(hvp({f.model, dom, data, f.base, u, eps / 2}));
    EXPECT_NEAR(r1 / r2, 1.0, 1e-3);
  }
}

TEST(Gamma, ZeroGradientIsDegenerate) {
  const auto f = fixture_qw2();
  const auto ctx = make_taylor_context(f.world, f.model, ParameterVector{1.0, 0.0}, 0.1);
  EXPECT_THROW(gamma_matrix(ctx), DegenerateError);
}

TEST(TaskVectorCosine, DiagonalAndOrthogonal) {
  const std::vector<ParameterVector> e{{1.0, 0.0}, {0.0, 1.0}};
  const auto c = task_vector_cosine(e, ParameterVector(2));
  EXPECT_EQ(c(0, 0), 1.0);
  EXPECT_EQ(c(1, 1), 1.0);
  EXPECT_EQ(c(0, 1), 0.0);
  EXPECT_EQ(c(1, 0), 0.0);
}

TEST(TaskVectorCosine, Qw2TrainedExpertsLowSimilarity) {
  const auto f = fixture_qw2();
  TrainConfig c;
  c.learning_rate = 0.05;
  c.steps = restricted_horizon_steps(f.world, f.model, f.base, 0.05);
  c.checkpoint_interval = c.steps;
  const auto cos = task_vector_cosine(train_all_experts(f.world, f.model, f.base, c), f.base);
  EXPECT_LT(cos(0, 1), 0.3);
}

TEST(TaskVectorCosine, ZeroTaskVectorIsDegenerate) {
  const std::vector<ParameterVector> e{{0.0, 0.0}, {0.0, 1.0}};
  EXPECT_THROW(task_vector_cosine(e, ParameterVector(2)), DegenerateError);
}

TEST(CurvatureResponses, ThreadCountDoesNotMatter) {
  const auto f = fixture_toy_net(3, 0.0, 2);
  const auto ctx = make_taylor_context(f.world, f.model, f.base, 0.5);
  EXPECT_EQ(curvature_responses(ctx, 1), curvature_responses(ctx, 3));
}
