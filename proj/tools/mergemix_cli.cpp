#include <CLI11.hpp>
#include <iostream>

#include "mergemix/orchestrator.hpp"

int main(int argc, char** argv) {
  using namespace mergemix;

  CLI::App app{"mergemix: data-mixture search by merging per-domain experts"};
  app.require_subcommand(1);
  app.fallthrough();

  CommandOptions opts;
  std::uint64_t seed = 0;
  app.add_option("--config", opts.config, "Run config (JSON)");
  app.add_option("--out", opts.out, "Output directory (a file path for export-heatmap)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the config's global seed");
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* pipeline = app.add_subcommand("pipeline", "Train experts, fit the surface, search and verify");
  auto* theory = app.add_subcommand("theory", "Discrepancy, order-of-error, gamma and cosine reports");
  auto* consistency = app.add_subcommand("consistency", "Rank consistency of merged vs trained mixtures");

  auto* cost = app.add_subcommand("cost", "Equivalent and relative cost table");
  std::filesystem::path entries;
  cost->add_option("--entries", entries, "Cost entries file (JSON)")->required();

  auto* heatmap = app.add_subcommand("export-heatmap", "Predicted values over the simplex lattice");
  HeatmapOptions hm;
  heatmap->add_option("--surface", hm.surface, "Fitted surface (surface.model.json)")->required();
  heatmap->add_option("--target", hm.target, "Capability name or index, or 'utility'")->capture_default_str();
  heatmap->add_option("--resolution", hm.resolution, "Lattice resolution")->capture_default_str();
  heatmap->add_flag("--filter-top", hm.filter_top, "Keep only the highest-valued lattice points");
  heatmap->add_option("--top-fraction", hm.top_fraction, "Fraction kept by --filter-top")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (*seed_opt) opts.seed = seed;

  if (*pipeline) return cmd_pipeline(opts, std::cout, std::cerr);
  if (*theory) return cmd_theory(opts, std::cout, std::cerr);
  if (*consistency) return cmd_consistency(opts, std::cout, std::cerr);
  if (*cost) return cmd_cost(entries, opts.out, std::cout, std::cerr);
  if (*heatmap) {
    hm.out = opts.out;
    return cmd_export_heatmap(hm, std::cout, std::cerr);
  }
  return kExitUsage;
}
