#include "mergemix/boosted_trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mergemix/errors.hpp"

namespace mergemix {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& rows, const std::vector<double>& residuals,
              const BoostingParams& params)
      : rows_(rows), res_(residuals), params_(params), width_(rows.front().size()) {}

  RegressionTree build() {
    std::vector<std::size_t> idx(rows_.size());
    std::iota(idx.begin(), idx.end(), 0);
    tree_.nodes.clear();
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& idx, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto i : idx) sum += res_[i];
    const double mean = sum / static_cast<double>(idx.size());

    SplitChoice best;
    if (depth < params_.max_depth && idx.size() >= 2 * params_.min_leaf) best = find_split(idx, sum);
    if (best.feature < 0) {
      tree_.nodes[id].value = params_.shrinkage * mean;
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (rows_[i][best.feature] <= best.threshold ? left : right).push_back(i);
    }
    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  SplitChoice find_split(const std::vector<std::size_t>& idx, double total) const {
    const double n = static_cast<double>(idx.size());
    double ss = 0.0;
    for (auto i : idx) ss += res_[i] * res_[i];
    const double min_gain = 1e-12 * std::max(ss, 1e-300);
    SplitChoice best;
    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < width_; ++f) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rows_[a][f] < rows_[b][f];
      });
      double left_sum = 0.0;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        left_sum += res_[order[pos]];
        const std::size_t nl = pos + 1;
        const std::size_t nr = order.size() - nl;
        const double xl = rows_[order[pos]][f];
        const double xr = rows_[order[pos + 1]][f];
        if (xl == xr || nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - total * total / n;
        if (gain > best.gain && gain > min_gain) {
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (xl + xr);
          best.gain = gain;
          best.left_count = nl;
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& rows_;
  const std::vector<double>& res_;
  const BoostingParams& params_;
  std::size_t width_;
  RegressionTree tree_;
};

}  // namespace

void BoostingParams::validate() const {
  if (trees < 1) throw InvalidArgument("boosting needs at least one tree");
  if (max_depth < 1) throw InvalidArgument("tree depth must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw InvalidArgument("shrinkage must be in (0, 1]");
  if (min_leaf < 1) throw InvalidArgument("minimum leaf count must be >= 1");
}

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(id)].value;
}

BoostedEnsemble::BoostedEnsemble(double base_score, std::vector<RegressionTree> trees,
                                 BoostingParams params)
    : base_score_(base_score), trees_(std::move(trees)), params_(params) {}

BoostedEnsemble BoostedEnsemble::fit(const std::vector<std::vector<double>>& rows,
                                     std::span<const double> targets,
                                     const BoostingParams& params) {
  params.validate();
  if (rows.empty() || rows.size() != targets.size())
    throw DimensionError("boosting: need one target per nonempty row");
  const std::size_t width = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != width) throw DimensionError("boosting: ragged feature rows");
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw NumericError("boosting: non-finite target");
  }

  double base = targets.front();
  const bool constant = std::all_of(targets.begin(), targets.end(),
                                    [&](double t) { return t == targets.front(); });
  if (!constant) {
    base = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
  }

  std::vector<double> prediction(rows.size(), base);
  std::vector<double> residual(rows.size());
  std::vector<RegressionTree> trees;
  trees.reserve(params.trees);
  for (std::size_t t = 0; t < params.trees; ++t) {
    for (std::size_t i = 0; i < rows.size(); ++i) residual[i] = targets[i] - prediction[i];
    TreeBuilder builder(rows, residual, params);
    trees.push_back(builder.build());
    for (std::size_t i = 0; i < rows.size(); ++i) prediction[i] += trees.back().predict(rows[i]);
  }
  return BoostedEnsemble(base, std::move(trees), params);
}

double BoostedEnsemble::predict(std::span<const double> x) const {
  double y = base_score_;
  for (const auto& t : trees_) y += t.predict(x);
  return y;
}

}  // namespace mergemix
