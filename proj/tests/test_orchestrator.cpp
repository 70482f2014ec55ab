#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "mergemix/io.hpp"
#include "mergemix/orchestrator.hpp"
#include "test_util.hpp"

using namespace mergemix;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

CommandOptions options(const std::string& config, const fs::path& out) {
  CommandOptions o;
  o.config = testutil::source_path("configs/" + config);
  o.out = out;
  return o;
}

int run_pipeline(const CommandOptions& o, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = cmd_pipeline(o, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  io::write_atomic(p, j.dump());
  return p;
}

SurfaceModel fitted(const std::vector<std::pair<double, double>>& points) {
  SampleSet s;
  s.capability_names = {"only"};
  for (const auto& [a, y] : points) s.samples.push_back({SimplexWeights({a, 1 - a}), {y}, {y}, "x"});
  BoostingParams bp;
  bp.trees = 10;
  bp.min_leaf = 1;
  return fit_surface(s, bp);
}

}  // namespace

TEST(Pipeline, Qw2IsByteReproducible) {
  const auto a = testutil::scratch_dir("orch_qw2_a"), b = testutil::scratch_dir("orch_qw2_b");
  ASSERT_EQ(run_pipeline(options("qw2.json", a)), kExitOk);
  ASSERT_EQ(run_pipeline(options("qw2.json", b)), kExitOk);
  for (const char* f : {"samples.csv", "surface.model.json", "report.json", "experts/d1.ckpt"})
    EXPECT_EQ(io::read_text(a / f), io::read_text(b / f)) << f;
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
  const auto report = json::parse(io::read_text(a / "report.json"));
  EXPECT_EQ(report["format"], io::kReportFormat);
  EXPECT_EQ(report["final"]["alpha"].size(), 2u);
}

TEST(Pipeline, Qw4ReproducibleAndFast) {
  const auto a = testutil::scratch_dir("orch_qw4_a"), b = testutil::scratch_dir("orch_qw4_b");
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(run_pipeline(options("qw4.json", a)), kExitOk);
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(elapsed, std::chrono::minutes(5));
  ASSERT_EQ(run_pipeline(options("qw4.json", b)), kExitOk);
  for (const char* f : {"samples.csv", "surface.model.json", "report.json"})
    EXPECT_EQ(io::read_text(a / f), io::read_text(b / f)) << f;
  const auto report = json::parse(io::read_text(a / "report.json"));
  EXPECT_TRUE(report["beats_baselines"].get<bool>());
}

TEST(Pipeline, SeedOverrideChangesSamples) {
  const auto a = testutil::scratch_dir("orch_seed_a"), b = testutil::scratch_dir("orch_seed_b");
  auto oa = options("qw2.json", a), ob = options("qw2.json", b);
  ob.seed = 17;
  ASSERT_EQ(run_pipeline(oa), kExitOk);
  ASSERT_EQ(run_pipeline(ob), kExitOk);
  EXPECT_NE(io::read_text(a / "samples.csv"), io::read_text(b / "samples.csv"));
}

TEST(Pipeline, MissingFieldExitsTwoAndWritesNothing) {
  const auto dir = testutil::scratch_dir("orch_missing");
  auto j = json::parse(io::read_text(testutil::source_path("configs/qw2.json")));
  j.erase("train");
  CommandOptions o;
  o.config = write_config(dir, j);
  o.out = dir / "run";
  std::string err;
  EXPECT_EQ(run_pipeline(o, &err), kExitUsage);
  EXPECT_NE(err.find("train"), std::string::npos);
  EXPECT_FALSE(fs::exists(o.out));
}

TEST(Pipeline, HierarchicalWritesLeafRatios) {
  const auto dir = testutil::scratch_dir("orch_sep");
  ASSERT_EQ(run_pipeline(options("qw_sep_bottom_up.json", dir)), kExitOk);
  const auto csv = io::read_text(dir / "leaf_ratios.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "leaf,ratio");
  EXPECT_TRUE(fs::exists(dir / "hierarchy.json"));
}

TEST(Theory, Qw2GammaAndOrder) {
  const auto dir = testutil::scratch_dir("orch_theory");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_theory(options("qw2.json", dir), out, err), kExitOk) << err.str();
  EXPECT_EQ(io::read_text(dir / "gamma.csv"), "domain,d1,d2\nd1,1,1\nd2,2,1\n");
  const auto r = json::parse(io::read_text(dir / "theory_report.json"));
  const double ratio = r["order_of_error"]["error_ratio"];
  EXPECT_GE(ratio, 3.2);
  EXPECT_LE(ratio, 4.8);
  EXPECT_EQ(r["delta_sweep"].size(), 11u);
}

TEST(Theory, IdenticalDomainsGiveZeroDelta) {
  const auto dir = testutil::scratch_dir("orch_identical");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_theory(options("identical_theory.json", dir), out, err), kExitOk) << err.str();
  const auto r = json::parse(io::read_text(dir / "theory_report.json"));
  for (const auto& row : r["delta_sweep"]) EXPECT_EQ(row["delta_norm"].get<double>(), 0.0);
  EXPECT_EQ(r["order_of_error"]["error_ratio"], nullptr);
}

TEST(Consistency, Qw2) {
  const auto dir = testutil::scratch_dir("orch_consistency");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_consistency(options("qw2.json", dir), out, err), kExitOk) << err.str();
  const auto r = json::parse(io::read_text(dir / "consistency.json"));
  EXPECT_GE(r["correlation"]["rho"].get<double>(), 0.8);
  EXPECT_NE(out.str().find("spearman rho"), std::string::npos);
}

TEST(Consistency, EmptyRatiosExitTwo) {
  const auto dir = testutil::scratch_dir("orch_consistency_empty");
  auto j = json::parse(io::read_text(testutil::source_path("configs/qw2.json")));
  j.erase("consistency");
  CommandOptions o;
  o.config = write_config(dir, j);
  o.out = dir / "run";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_consistency(o, out, err), kExitUsage);
  EXPECT_NE(err.str().find("usage"), std::string::npos);
  EXPECT_FALSE(fs::exists(o.out));
}

TEST(Cost, ReferenceRowIsOneAndManualIsHundred) {
  const auto dir = testutil::scratch_dir("orch_cost");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_cost(testutil::source_path("configs/baseline_costs.json"), dir, out, err), kExitOk) << err.str();
  const auto text = out.str();
  EXPECT_NE(text.find("100×"), std::string::npos) << text;
  EXPECT_NE(text.find("1.0×"), std::string::npos) << text;
  EXPECT_TRUE(fs::exists(dir / "cost_table.csv"));
}

TEST(Cost, BadEntriesExitTwo) {
  const auto dir = testutil::scratch_dir("orch_cost_bad");
  io::write_atomic(dir / "e.json", R"({"entries": [{"name": "x", "model_size": "huge", "tokens_billions": 1, "runs": 1}]})");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_cost(dir / "e.json", {}, out, err), kExitUsage);
}

TEST(Heatmap, TwoDomainHalfResolution) {
  const auto s = fitted({{0.0, 0.1}, {0.25, 0.2}, {0.5, 0.4}, {0.75, 0.6}, {1.0, 0.9}});
  const auto rows = heatmap_rows(s, "only", 0.5);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].alpha, SimplexWeights({0.5, 0.5}));
  const auto csv = heatmap_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha_1,alpha_2,predicted");
}

TEST(Heatmap, ConstantSurfaceIsFlat) {
  const auto s = fitted({{0.0, 0.5}, {0.5, 0.5}, {1.0, 0.5}});
  for (const auto& r : heatmap_rows(s, "utility", 0.1)) EXPECT_DOUBLE_EQ(r.value, 0.5);
}

TEST(Heatmap, FilterTopKeepsFraction) {
  const auto s = fitted({{0.0, 0.1}, {0.25, 0.2}, {0.5, 0.4}, {0.75, 0.6}, {1.0, 0.9}});
  const auto all = heatmap_rows(s, "0", 0.01);
  ASSERT_EQ(all.size(), 101u);
  const auto top = heatmap_rows(s, "0", 0.01, 0.15);
  EXPECT_EQ(top.size(), 15u);
  double worst_kept = 1e9;
  for (const auto& r : top) worst_kept = std::min(worst_kept, r.value);
  std::size_t above = 0;
  for (const auto& r : all) above += r.value > worst_kept;
  EXPECT_LE(above, 15u);
}

TEST(Heatmap, UnknownTarget) {
  const auto s = fitted({{0.0, 0.1}, {0.5, 0.5}, {1.0, 0.9}});
  EXPECT_THROW(heatmap_rows(s, "nope", 0.5), InvalidArgument);
  const auto dir = testutil::scratch_dir("orch_heatmap");
  io::write_atomic(dir / "s.json", io::dump(io::surface_to_json(s)));
  HeatmapOptions o;
  o.surface = dir / "s.json";
  o.target = "nope";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_export_heatmap(o, out, err), kExitUsage);
}
