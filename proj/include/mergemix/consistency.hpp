#pragma once

#include <vector>

#include "mergemix/domain_world.hpp"
#include "mergemix/expert_forge.hpp"
#include "mergemix/metrics_stats.hpp"
#include "mergemix/simplex.hpp"

namespace mergemix {

struct ConsistencyRow {
  SimplexWeights lambda;
  std::vector<double> merged_raw;
  std::vector<double> trained_raw;
  double merged_score = 0.0;
  double trained_score = 0.0;
  double merged_rank = 0.0;
  double trained_rank = 0.0;
};

struct ConsistencyReport {
  CorrelationReport correlation;  // merged vs trained utility ranks
  std::vector<ConsistencyRow> rows;
  NormalizationContext context;   // over merged and trained scores together
  double mean_gap = 0.0;          // mean(trained - merged), reported only
};

/// Scores every ratio twice: by merging the experts at alpha = lambda and by
/// training on the lambda mixture from the same base for the same budget.
ConsistencyReport rank_consistency_experiment(const World& world, const ModelSpec& model,
                                              const ParameterVector& base,
                                              const std::vector<ParameterVector>& experts,
                                              const std::vector<SimplexWeights>& ratios,
                                              const TrainConfig& config,
                                              const UtilitySpec& utility = {},
                                              std::size_t threads = 1);

/// Trains the experts first.
ConsistencyReport rank_consistency_experiment(const World& world, const ModelSpec& model,
                                              const ParameterVector& base,
                                              const std::vector<SimplexWeights>& ratios,
                                              const TrainConfig& config,
                                              const UtilitySpec& utility = {},
                                              std::size_t threads = 1);

/// (0.1, 0.9), (0.2, 0.8), ..., (0.9, 0.1).
std::vector<SimplexWeights> two_domain_sweep();

}  // namespace mergemix
