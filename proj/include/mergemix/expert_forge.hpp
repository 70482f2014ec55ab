#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mergemix/domain_world.hpp"
#include "mergemix/model.hpp"
#include "mergemix/param_core.hpp"
#include "mergemix/simplex.hpp"

namespace mergemix {

/// Constant learning rate by construction: there is no schedule field.
struct TrainConfig {
  double learning_rate = 0.05;
  long long steps = 0;
  std::size_t batch_size = 0;  // 0 = full batch
  long long checkpoint_interval = 1;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrajectoryPoint {
  long long step = 0;
  ParameterVector params;
  std::vector<CapabilityScore> scores;  // one per capability domain
};

struct ExpertArtifact {
  std::string domain;  // domain name, or "mixture" for mixed-data runs
  ParameterVector final_params;
  std::vector<TrajectoryPoint> trajectory;
  TrainConfig config;
  std::string base_digest;
  std::optional<SimplexWeights> mixture;
};

/// Plain gradient descent on one domain from the shared base. Full batch for
/// quadratic domains, seeded shuffled mini-batches for toy nets. Throws
/// TrainingError naming the step if any parameter becomes non-finite.
ExpertArtifact train_expert(const World& world, const ModelSpec& model,
                            const ParameterVector& base, std::size_t domain,
                            const TrainConfig& config);

/// Gradient descent on the mixed objective sum_k lambda_k L_k. Toy-net
/// mini-batches come from domain k with probability lambda_k.
ExpertArtifact train_on_mixture(const World& world, const ModelSpec& model,
                                const ParameterVector& base, const SimplexWeights& lambda,
                                const TrainConfig& config);

/// One expert per training domain, independent runs dispatched over `threads`.
std::vector<ExpertArtifact> train_all_experts(const World& world, const ModelSpec& model,
                                              const ParameterVector& base,
                                              const TrainConfig& config, std::size_t threads = 1);

/// Largest T with eta * T * max_k |g_k(base)| <= 0.5 * min_k |base - mu_k|
/// (quadratic worlds only), at least 1.
long long restricted_horizon_steps(const World& world, const ModelSpec& model,
                                   const ParameterVector& base, double learning_rate);

/// Fills per-checkpoint normalized scores using the trajectory's own range.
void normalize_trajectory_scores(ExpertArtifact& artifact);

}  // namespace mergemix
