#include "mergemix/hier_search.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "mergemix/merge_engine.hpp"

namespace mergemix {

namespace {

void collect_leaves(const MixtureNode& n, std::vector<std::string>& out) {
  if (n.is_leaf()) {
    out.push_back(n.name);
    return;
  }
  for (const auto& c : n.children) collect_leaves(c, out);
}

std::size_t node_depth(const MixtureNode& n) {
  std::size_t d = 0;
  for (const auto& c : n.children) d = std::max(d, node_depth(c) + 1);
  return d;
}

void validate_node(const MixtureNode& n) {
  if (n.name.empty()) throw InvalidArgument("mixture tree node without a name");
  if (n.is_leaf()) {
    if (n.weights) throw InvalidArgument("leaf '" + n.name + "' cannot carry weights");
    return;
  }
  if (n.weights && n.weights->size() != n.children.size())
    throw DimensionError("node '" + n.name + "' has " + std::to_string(n.children.size()) +
                         " children but " + std::to_string(n.weights->size()) + " weights");
  for (const auto& c : n.children) validate_node(c);
}

void flatten_into(const MixtureNode& n, double mass, std::vector<double>& out) {
  if (n.is_leaf()) {
    out.push_back(mass);
    return;
  }
  if (!n.weights) throw InvalidArgument("node '" + n.name + "' has no weights to flatten");
  for (std::size_t i = 0; i < n.children.size(); ++i)
    flatten_into(n.children[i], mass * (*n.weights)[i], out);
}

const ParameterVector& leaf_expert(const HierContext& ctx, const std::string& name) {
  const auto it = ctx.experts.find(name);
  if (it == ctx.experts.end())
    throw InvalidArgument("leaf '" + name + "' has no trained expert");
  return it->second;
}

// A cluster is judged by the capability of the same name when one exists.
UtilitySpec utility_for(const MixtureNode& n, const World& world, const UtilitySpec& inherited) {
  for (std::size_t m = 0; m < world.capability_count(); ++m)
    if (world.capabilities()[m].name == n.name) return UtilitySpec::single(m);
  return inherited;
}

class Optimizer {
 public:
  Optimizer(const HierContext& ctx, HierResult& result) : ctx_(ctx), result_(result) {}

  SimplexWeights stage(const MixtureNode& node, const MergeProblem& problem,
                       const UtilitySpec& utility, bool is_root) {
    StageRecord rec;
    rec.node = node.name;
    const std::size_t k = problem.k();
    const std::size_t index = stage_index_++;
    if (k == 1) {
      rec.weights = SimplexWeights({1.0});
      rec.method = "single-child";
    } else if (std::all_of(problem.components.begin(), problem.components.end(),
                           [&](const ParameterVector& c) { return c == problem.components[0]; })) {
      rec.weights = SimplexWeights::uniform(k);
      rec.method = "identical-children";
    } else if (problem.scale == 0.0) {
      rec.weights = SimplexWeights::uniform(k);
      rec.method = "inactive";
    } else {
      SearchSettings s = ctx_.settings;
      s.utility = utility;
      if (!is_root) {
        s.priors.clear();
        s.seed_count = std::max(s.seed_count, k + 1);
        s.seed = ctx_.settings.seed + 0x9E3779B97F4A7C15ULL * index;
      }
      auto run = run_surface_search(problem, ctx_.world, ctx_.model, s, ctx_.threads);
      rec.weights = run.optimum.alpha;
      rec.method = "search";
      rec.predicted_utility = run.verification.predicted_utility;
      rec.actual_utility = run.verification.actual_utility;
      if (is_root) result_.root_run = std::move(run);
    }
    result_.stages.push_back(rec);
    return rec.weights;
  }

  ParameterVector consolidate_uniform(const MixtureNode& n) const {
    if (n.is_leaf()) return leaf_expert(ctx_, n.name);
    std::vector<ParameterVector> parts;
    for (const auto& c : n.children) parts.push_back(consolidate_uniform(c));
    return merge(ctx_.base, parts, SimplexWeights::uniform(parts.size()));
  }

  void top_down(MixtureNode& node, const std::optional<ParameterVector>& anchor, double scale,
                const UtilitySpec& utility, bool is_root) {
    MergeProblem problem;
    problem.base = ctx_.base;
    for (const auto& c : node.children) problem.components.push_back(consolidate_uniform(c));
    problem.anchor = anchor;
    problem.scale = scale;
    node.weights = stage(node, problem, utility, is_root);
    const auto& w = *node.weights;

    for (std::size_t i = 0; i < node.children.size(); ++i) {
      auto& child = node.children[i];
      if (child.is_leaf()) continue;
      // siblings frozen at their current consolidated experts
      ParameterVector frozen = anchor ? *anchor : ctx_.base;
      for (std::size_t s = 0; s < node.children.size(); ++s) {
        if (s == i || w[s] == 0.0) continue;
        const double c = scale * w[s];
        const auto& comp = problem.components[s];
        for (std::size_t p = 0; p < frozen.size(); ++p) frozen[p] += c * (comp[p] - ctx_.base[p]);
      }
      top_down(child, frozen, scale * w[i], utility_for(child, ctx_.world, utility), false);
    }
  }

  ParameterVector bottom_up(MixtureNode& node, const UtilitySpec& utility, bool is_root) {
    if (node.is_leaf()) return leaf_expert(ctx_, node.name);
    std::vector<ParameterVector> parts;
    for (auto& c : node.children)
      parts.push_back(bottom_up(c, utility_for(c, ctx_.world, utility), false));
    const auto problem = MergeProblem::flat(ctx_.base, parts);
    node.weights = stage(node, problem, utility, is_root);
    return merge(ctx_.base, parts, *node.weights);
  }

 private:
  const HierContext& ctx_;
  HierResult& result_;
  std::size_t stage_index_ = 0;
};

void check_tree(const MixtureTree& tree, const HierContext& ctx) {
  tree.validate();
  if (tree.root.is_leaf()) throw InvalidArgument("mixture tree root must have children");
  for (const auto& leaf : tree.leaf_names()) {
    leaf_expert(ctx, leaf);
    ctx.world.domain_index(leaf);
  }
}

}  // namespace

void MixtureTree::validate() const {
  validate_node(root);
  const auto leaves = leaf_names();
  std::set<std::string> seen;
  for (const auto& l : leaves)
    if (!seen.insert(l).second) throw InvalidArgument("duplicate leaf '" + l + "' in mixture tree");
}

std::vector<std::string> MixtureTree::leaf_names() const {
  std::vector<std::string> out;
  collect_leaves(root, out);
  return out;
}

std::size_t MixtureTree::depth() const { return node_depth(root); }

MixtureTree MixtureTree::flat(const std::vector<std::string>& leaves) {
  MixtureTree t;
  t.root.name = "root";
  for (const auto& l : leaves) t.root.children.push_back(MixtureNode{l, {}, std::nullopt});
  return t;
}

SimplexWeights flatten_ratios(const MixtureTree& tree) {
  tree.validate();
  std::vector<double> out;
  flatten_into(tree.root, 1.0, out);
  return SimplexWeights(std::move(out));
}

HierResult optimize_top_down(const MixtureTree& tree, const HierContext& ctx) {
  check_tree(tree, ctx);
  HierResult result;
  result.tree = tree;
  Optimizer opt(ctx, result);
  opt.top_down(result.tree.root, std::nullopt, 1.0, ctx.settings.utility, true);
  result.leaf_ratios = flatten_ratios(result.tree);
  return result;
}

HierResult optimize_bottom_up(const MixtureTree& tree, const HierContext& ctx) {
  check_tree(tree, ctx);
  HierResult result;
  result.tree = tree;
  Optimizer opt(ctx, result);
  opt.bottom_up(result.tree.root, ctx.settings.utility, true);
  result.leaf_ratios = flatten_ratios(result.tree);
  return result;
}

ParameterVector merge_leaf_ratios(const MixtureTree& tree, const HierContext& ctx,
                                  const SimplexWeights& ratios) {
  std::vector<ParameterVector> experts;
  for (const auto& l : tree.leaf_names()) experts.push_back(leaf_expert(ctx, l));
  return merge(ctx.base, experts, ratios);
}

}  // namespace mergemix
