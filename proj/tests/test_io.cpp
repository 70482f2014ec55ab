#include <gtest/gtest.h>

#include <algorithm>

#include "mergemix/io.hpp"
#include "test_util.hpp"

using namespace mergemix;
namespace fs = std::filesystem;

namespace {

SampleSet tiny_samples() {
  const auto f = fixture_qw2();
  const std::vector<ParameterVector> experts{{1.0, 0.0}, {0.0, 1.0}};
  return collect_samples(MergeProblem::flat(f.base, experts), f.world, f.model, sample_seed_configs(2, 6, {}, 1));
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const auto model = ModelSpec::toy_net(2, 3, 1, Activation::tanh);
  ParameterVector p(model.param_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.1 * static_cast<double>(i) - 1.0 / 3.0;
  const auto text = io::checkpoint_text(model, p);
  const auto ck = io::parse_checkpoint(text);
  EXPECT_EQ(ck.params, p);
  EXPECT_EQ(ck.model, model);
  EXPECT_EQ(ck.digest, digest(p));
  EXPECT_EQ(io::checkpoint_text(ck.model, ck.params), text);
}

TEST(Checkpoint, TamperingIsDetected) {
  const auto model = ModelSpec::quadratic_world(2);
  auto j = nlohmann::json::parse(io::checkpoint_text(model, ParameterVector{0.25, 0.5}));
  j["params"][0] = 0.26;
  EXPECT_THROW(io::parse_checkpoint(j.dump()), FormatError);
  j = nlohmann::json::parse(io::checkpoint_text(model, ParameterVector{0.25, 0.5}));
  j["format"] = "other";
  EXPECT_THROW(io::parse_checkpoint(j.dump()), FormatError);
  j = nlohmann::json::parse(io::checkpoint_text(model, ParameterVector{0.25, 0.5}));
  j["param_count"] = 3;
  EXPECT_THROW(io::parse_checkpoint(j.dump()), FormatError);
  EXPECT_THROW(io::parse_checkpoint("not json"), FormatError);
}

TEST(Surface, JsonRoundTrip) {
  const auto samples = tiny_samples();
  BoostingParams bp;
  bp.trees = 20;
  const auto s = fit_surface(samples, bp);
  const auto back = io::surface_from_json(nlohmann::json::parse(io::dump(io::surface_to_json(s))));
  EXPECT_EQ(back, s);
  const SimplexWeights a({0.37, 0.63});
  EXPECT_EQ(predict(back, a), predict(s, a));
}

TEST(Surface, RejectsWrongFormat) {
  auto j = io::surface_to_json(fit_surface(tiny_samples(), BoostingParams{}));
  j["format"] = "mm-surface-v0";
  EXPECT_THROW(io::surface_from_json(j), FormatError);
}

TEST(Verification, JsonRoundTrip) {
  VerificationReport r;
  r.alpha = SimplexWeights({0.3, 0.7});
  r.predicted = {0.1, 0.2};
  r.actual_raw = {-0.5, -0.25};
  r.actual = {0.15, 0.1};
  r.gap = {0.05, 0.1};
  r.predicted_utility = 0.15;
  r.actual_utility = 0.125;
  r.merged_digest = "abc";
  EXPECT_EQ(io::verification_from_json(io::verification_to_json(r)), r);
}

TEST(Tree, JsonRoundTripAndUnknownKeys) {
  const auto t = MixtureTree::flat({"x", "y"});
  EXPECT_EQ(io::tree_to_json(io::tree_from_json(io::tree_to_json(t))), io::tree_to_json(t));
  auto j = io::tree_to_json(t);
  j["colour"] = "red";
  EXPECT_THROW(io::tree_from_json(j), Error);
}

TEST(Csv, HeadersAndLineEndings) {
  const auto s = io::samples_csv(tiny_samples());
  EXPECT_EQ(s.substr(0, s.find('\n')), "alpha_1,alpha_2,y_1,y_2,digest");
  EXPECT_EQ(s.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 7);

  Eigen::MatrixXd m(2, 2);
  m << 1, 0.5, 0.25, 1;
  const auto g = io::matrix_csv(m, {"d1", "d2"});
  EXPECT_EQ(g, "domain,d1,d2\nd1,1,0.5\nd2,0.25,1\n");
  EXPECT_EQ(io::leaf_ratios_csv({"a", "b"}, SimplexWeights({0.25, 0.75})), "leaf,ratio\na,0.25\nb,0.75\n");
}

TEST(Csv, TrajectoryColumns) {
  const auto f = fixture_qw2();
  TrainConfig c;
  c.learning_rate = 0.05;
  c.steps = 4;
  c.checkpoint_interval = 2;
  const auto e = train_expert(f.world, f.model, f.base, 0, c);
  const auto t = io::trajectory_csv(e);
  EXPECT_EQ(t.substr(0, t.find('\n')), "step,d1_raw,d1_normalized,d2_raw,d2_normalized");
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 4);
}

TEST(WriteAtomic, ReplacesAndLeavesNoTemp) {
  const auto dir = testutil::scratch_dir("io_atomic");
  const auto p = dir / "sub" / "file.txt";
  io::write_atomic(p, "first");
  io::write_atomic(p, "second");
  EXPECT_EQ(io::read_text(p), "second");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST(FormatReal, RoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) EXPECT_EQ(std::stod(io::format_real(x)), x);
}
