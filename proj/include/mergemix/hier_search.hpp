#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mergemix/domain_world.hpp"
#include "mergemix/simplex.hpp"
#include "mergemix/surface_lab.hpp"

namespace mergemix {

/// Internal nodes carry optional weights over their children; leaves name a
/// training domain.
struct MixtureNode {
  std::string name;
  std::vector<MixtureNode> children;
  std::optional<SimplexWeights> weights;

  bool is_leaf() const noexcept { return children.empty(); }
};

struct MixtureTree {
  MixtureNode root;

  /// Unique leaf names, internal-node weights sized to their children.
  void validate() const;
  std::vector<std::string> leaf_names() const;  // depth-first, left to right
  std::size_t depth() const;                    // a root with only leaves has depth 1

  /// Root whose children are the given leaves.
  static MixtureTree flat(const std::vector<std::string>& leaves);
};

/// Leaf weight = product of weights along its root path, in leaf_names() order.
SimplexWeights flatten_ratios(const MixtureTree& tree);

struct HierContext {
  const World& world;
  const ModelSpec& model;
  ParameterVector base;
  std::map<std::string, ParameterVector> experts;  // leaf name -> trained expert
  SearchSettings settings;                         // root-stage settings and utility
  std::size_t threads = 1;
};

struct StageRecord {
  std::string node;
  SimplexWeights weights;
  std::string method;  // "search", "single-child", "identical-children", "inactive"
  double predicted_utility = 0.0;
  double actual_utility = 0.0;
};

struct HierResult {
  MixtureTree tree;
  SimplexWeights leaf_ratios;
  std::vector<StageRecord> stages;       // in execution order
  std::optional<SurfaceRun> root_run;    // the root stage's full run
};

/// Root weights first over uniformly consolidated children, then each
/// cluster's weights with siblings frozen against its own capability.
HierResult optimize_top_down(const MixtureTree& tree, const HierContext& ctx);

/// Each cluster first against its own capability, consolidated by merging at
/// those weights, then the root over consolidated experts.
HierResult optimize_bottom_up(const MixtureTree& tree, const HierContext& ctx);

/// base + sum_i r_i (expert_i - base) over the tree's leaves.
ParameterVector merge_leaf_ratios(const MixtureTree& tree, const HierContext& ctx,
                                  const SimplexWeights& ratios);

}  // namespace mergemix
