#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mergemix/expert_forge.hpp"
#include "mergemix/param_core.hpp"
#include "mergemix/simplex.hpp"

namespace mergemix {

struct MergeRecipe {
  ParameterVector base;
  std::vector<ParameterVector> experts;
  SimplexWeights alpha;

  void validate() const;
};

/// base + sum_k alpha_k (expert_k - base). A one-hot alpha returns the expert
/// unchanged.
ParameterVector merge(const MergeRecipe& recipe);

/// Same formula without copying the expert vectors into a recipe.
ParameterVector merge(const ParameterVector& base, std::span<const ParameterVector> experts,
                      const SimplexWeights& alpha);

/// Unweighted element-wise mean; defined as merge(0, checkpoints, uniform).
ParameterVector soup(std::span<const ParameterVector> checkpoints);

/// The n highest-utility checkpoints (ties: earlier step first), returned in
/// trajectory order.
std::vector<ParameterVector> select_top_checkpoints(std::span<const TrajectoryPoint> trajectory,
                                                    std::span<const double> scores,
                                                    std::size_t n);

struct AnnealMode {
  enum class Kind { window, top_n };
  Kind kind = Kind::window;
  std::size_t count = 1;

  static AnnealMode window(std::size_t n) { return {Kind::window, n}; }
  static AnnealMode top(std::size_t n) { return {Kind::top_n, n}; }
};

using CheckpointScorer = std::function<double(const ParameterVector&)>;

/// Soup of the trailing `window` checkpoints, or of the `top_n` checkpoints
/// ranked by `scorer` (required for top_n).
ParameterVector simulate_anneal(const ExpertArtifact& artifact, AnnealMode mode,
                                const CheckpointScorer& scorer = {});

}  // namespace mergemix
