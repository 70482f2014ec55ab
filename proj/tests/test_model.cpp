#include <gtest/gtest.h>

#include <cmath>

#include "mergemix/domain_world.hpp"
#include "mergemix/model.hpp"
#include "test_util.hpp"

using namespace mergemix;
using mergemix::testutil::diag;
using mergemix::testutil::quadratic;

namespace {

const Dataset kNoData{};

DomainSpec regression_domain(std::size_t in, std::size_t out, double noise, std::uint64_t seed) {
  DomainSpec d;
  d.name = "reg";
  Eigen::MatrixXd w(out, in);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = 0.3 * static_cast<double>(r - c) + 0.1;
  d.generator = RegressionGenerator{w, noise};
  d.train_size = 32;
  d.heldout_size = 16;
  d.seed = seed;
  return d;
}

}  // namespace

TEST(QuadraticLoss, ZeroAtMinimizer) {
  const auto m = ModelSpec::quadratic_world(2);
  const auto d = quadratic("d", ParameterVector{1.0, 0.0}, diag({1, 1}));
  EXPECT_EQ(loss(m, d, kNoData, ParameterVector{1.0, 0.0}), 0.0);
}

TEST(QuadraticLoss, HandEvaluation) {
  const auto m = ModelSpec::quadratic_world(2);
  const auto d = quadratic("d", ParameterVector{1.0, 0.0}, diag({1, 1}));
  EXPECT_DOUBLE_EQ(loss(m, d, kNoData, ParameterVector(2)), 0.5);
}

TEST(QuadraticGrad, HandEvaluation) {
  const auto m = ModelSpec::quadratic_world(2);
  const auto d = quadratic("d", ParameterVector{1.0, 0.0}, diag({1, 1}));
  EXPECT_EQ(grad(m, d, kNoData, ParameterVector(2)), (ParameterVector{-1.0, 0.0}));
  EXPECT_EQ(grad(m, d, kNoData, ParameterVector{1.0, 0.0}), ParameterVector(2));
}

TEST(QuadraticHvp, Analytic) {
  const auto m = ModelSpec::quadratic_world(2);
  const auto d = quadratic("d", ParameterVector{1.0, 0.0}, diag({2, 1}));
  EXPECT_EQ(hvp({m, d, kNoData, ParameterVector(2), ParameterVector{1.0, 1.0}, std::nullopt}),
            (ParameterVector{2.0, 1.0}));
  EXPECT_EQ(hvp({m, d, kNoData, ParameterVector(2), ParameterVector(2), std::nullopt}), ParameterVector(2));
}

TEST(QuadraticDomain, RejectsNonSpdCurvature) {
  auto d = quadratic("d", ParameterVector{1.0, 0.0}, diag({1, -1}));
  EXPECT_THROW(d.validate(), Error);
}

TEST(ToyNet, ZeroWeightsFitZeroTargets) {
  const auto m = ModelSpec::toy_net(3, 4, 2);
  Dataset data;
  for (int i = 0; i < 5; ++i) {
    data.inputs.push_back({0.1 * i, -0.2, 0.3});
    data.targets.push_back({0.0, 0.0});
  }
  auto d = regression_domain(3, 2, 0.0, 1);
  EXPECT_EQ(loss(m, d, data, ParameterVector(m.param_count())), 0.0);
}

TEST(ToyNet, GradientMatchesCentralDifference) {
  const auto m = ModelSpec::toy_net(3, 4, 2);
  const auto d = regression_domain(3, 2, 0.1, 11);
  const auto data = generate_world({d}).front().train;
  const auto theta = init_toy_net(m.net(), 5);
  const auto g = grad(m, d, data, theta);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta, down = theta;
    up[i] += eps;
    down[i] -= eps;
    const double fd = (loss(m, d, data, up) - loss(m, d, data, down)) / (2 * eps);
    EXPECT_LE(std::abs(fd - g[i]), 1e-4 * std::max(1.0, std::abs(g[i]))) << "coordinate " << i;
  }
}

TEST(ToyNet, HessianFromHvpIsSymmetric) {
  const auto m = ModelSpec::toy_net(3, 4, 2);  // 26 parameters
  ASSERT_LE(m.param_count(), 50u);
  const auto d = regression_domain(3, 2, 0.1, 3);
  const auto data = generate_world({d}).front().train;
  const auto theta = init_toy_net(m.net(), 9);
  const auto p = theta.size();
  Eigen::MatrixXd h(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    ParameterVector e(p);
    e[i] = 1.0;
    const auto col = hvp({m, d, data, theta, e, std::nullopt});
    for (std::size_t r = 0; r < p; ++r) h(r, i) = col[r];
  }
  const double scale = h.cwiseAbs().maxCoeff();
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < r; ++c)
      EXPECT_LE(std::abs(h(r, c) - h(c, r)), 1e-3 * std::max(scale, 1e-12)) << r << "," << c;
}

TEST(ModelSpec, RejectsOversizedNets) {
  EXPECT_THROW(ModelSpec::toy_net(100, 100, 10), DimensionError);
  EXPECT_THROW(ModelSpec::toy_net(0, 3, 1), DimensionError);
}

TEST(ModelSpec, ChecksDomainCompatibility) {
  const auto m = ModelSpec::quadratic_world(3);
  EXPECT_THROW(m.check_domain(quadratic("d", ParameterVector{1.0, 0.0}, diag({1, 1}))), DimensionError);
  EXPECT_THROW(m.check_domain(regression_domain(2, 1, 0.0, 1)), InvalidArgument);
}
