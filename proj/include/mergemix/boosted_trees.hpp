#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mergemix {

struct BoostingParams {
  std::size_t trees = 200;
  std::size_t max_depth = 3;
  double shrinkage = 0.05;
  std::size_t min_leaf = 2;
  std::uint64_t seed = 0;  // recorded; fitting uses every sample and feature in order

  void validate() const;
  bool operator==(const BoostingParams&) const = default;
};

/// Axis-aligned regression tree stored as a flat node array; node 0 is the root.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // x[feature] <= threshold
  int right = -1;
  double value = 0.0;
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
  bool operator==(const RegressionTree&) const = default;
};

/// Squared-error gradient boosting: start from the target mean, then fit each
/// tree to the current residuals and add it scaled by the shrinkage rate.
class BoostedEnsemble {
 public:
  BoostedEnsemble() = default;
  BoostedEnsemble(double base_score, std::vector<RegressionTree> trees, BoostingParams params);

  /// rows: n samples of equal width; targets: n values.
  static BoostedEnsemble fit(const std::vector<std::vector<double>>& rows,
                             std::span<const double> targets, const BoostingParams& params);

  double predict(std::span<const double> x) const;

  double base_score() const noexcept { return base_score_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  const BoostingParams& params() const noexcept { return params_; }
  bool operator==(const BoostedEnsemble&) const = default;

 private:
  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
  BoostingParams params_;
};

}  // namespace mergemix
