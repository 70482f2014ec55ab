#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mergemix/metrics_stats.hpp"
#include "mergemix/surface_lab.hpp"

namespace mergemix {

// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // run started and failed; partial artifacts kept
inline constexpr int kExitUsage = 2;    // bad config or arguments; nothing written

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

/// train experts -> sample -> fit -> search -> verify, plus the mode's
/// extras. Writes manifest.json last and only on success.
int cmd_pipeline(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Taylor discrepancy sweep, order-of-error scaling, gamma and task-vector
/// cosines for the config's world.
int cmd_theory(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Merged-vs-trained rank consistency over the config's consistency ratios.
int cmd_consistency(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Cost table from an entries file; `out_dir` may be empty to only print.
int cmd_cost(const std::filesystem::path& entries, const std::filesystem::path& out_dir,
             std::ostream& out, std::ostream& err);

struct HeatmapOptions {
  std::filesystem::path surface;
  std::string target = "utility";  // capability name, capability index or "utility"
  double resolution = 0.05;
  bool filter_top = false;
  double top_fraction = 0.15;
  std::filesystem::path out;  // CSV path; empty prints to `out`
};

int cmd_export_heatmap(const HeatmapOptions& opts, std::ostream& out, std::ostream& err);

// Pieces exposed for tests ----------------------------------------------------

struct HeatmapRow {
  SimplexWeights alpha;
  double value = 0.0;
};

/// Lattice rows in lattice order. With `top_fraction`, keeps the
/// max(1, floor(f * n)) highest values (ties to the earlier lattice point),
/// still in lattice order. Throws InvalidArgument on an unknown target.
std::vector<HeatmapRow> heatmap_rows(const SurfaceModel& surface, const std::string& target,
                                     double resolution,
                                     std::optional<double> top_fraction = std::nullopt);
std::string heatmap_csv(const std::vector<HeatmapRow>& rows);

/// {"reference": name, "entries": [{name, model_size, tokens_billions, runs}]}
std::vector<CostEntry> parse_cost_entries(const nlohmann::json& j, std::string* reference = nullptr);
std::string cost_csv(const CostModel& cost);

}  // namespace mergemix
