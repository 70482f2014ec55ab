#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mergemix/domain_world.hpp"
#include "mergemix/expert_forge.hpp"
#include "mergemix/hier_search.hpp"
#include "mergemix/surface_lab.hpp"

namespace mergemix {

enum class PipelineMode { flat, hierarchical_top_down, hierarchical_bottom_up, dynamic_recalibrate };

std::string to_string(PipelineMode mode);
PipelineMode pipeline_mode_from_string(const std::string& s);

struct RecalibrateSettings {
  double midpoint_fraction = 0.5;
  long long total_steps = 0;  // 0 = twice the expert budget
};

struct TheorySettings {
  std::optional<double> taylor_horizon;  // default: learning_rate * steps
  double order_horizon = 0.2;
  long long order_steps = 2000;
  std::optional<SimplexWeights> order_lambda;  // default: uniform
  std::vector<SimplexWeights> lambda_grid;     // default: lattice at 0.1
};

/// A validated config with every name resolved and every default applied.
struct RunConfig {
  std::string run_name;
  Fixture world;  // model, base and domains, whether named or inline
  std::string world_label;
  TrainConfig train;
  bool restricted_steps = false;
  SearchSettings search;
  PipelineMode mode = PipelineMode::flat;
  MixtureTree hierarchy;
  RecalibrateSettings recalibration;
  TheorySettings theory;
  std::vector<SimplexWeights> consistency_ratios;
  std::uint64_t seed = 0;
  std::string digest;  // of the canonical config text, seed override included
};

/// Throws ConfigError naming the offending key. Unknown keys are rejected at
/// every level. `seed_override` replaces the config's global seed.
RunConfig parse_run_config(const nlohmann::json& j,
                           std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace mergemix
