#include "mergemix/merge_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace mergemix {

// ---------------------------------------------------------------------------
// SimplexWeights
// ---------------------------------------------------------------------------

SimplexWeights::SimplexWeights(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw SimplexError("simplex weights need K >= 1");
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w)) throw SimplexError("simplex weight is not finite");
    if (w < 0.0) throw SimplexError("simplex weight " + std::to_string(w) + " is negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw SimplexError("simplex weights sum to " + std::to_string(sum) + ", not 1");
  if (sum != 1.0) {
    for (auto& w : weights_) w /= sum;
  }
}

SimplexWeights::SimplexWeights(std::initializer_list<double> weights)
    : SimplexWeights(std::vector<double>(weights)) {}

SimplexWeights SimplexWeights::uniform(std::size_t k) {
  if (k == 0) throw SimplexError("simplex weights need K >= 1");
  return SimplexWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

SimplexWeights SimplexWeights::one_hot(std::size_t k, std::size_t index) {
  if (index >= k) throw SimplexError("one-hot index out of range");
  std::vector<double> w(k, 0.0);
  w[index] = 1.0;
  return SimplexWeights(std::move(w));
}

std::size_t SimplexWeights::corner_index() const noexcept {
  std::size_t found = weights_.size();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 1.0) {
      found = i;
    } else if (weights_[i] != 0.0) {
      return weights_.size();
    }
  }
  return found;
}

std::string SimplexWeights::to_string() const {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", weights_[i]);
    s += (i ? ", " : "") + std::string(buf);
  }
  return s + ")";
}

double distance_inf(const SimplexWeights& a, const SimplexWeights& b) {
  if (a.size() != b.size()) throw DimensionError("distance_inf: simplex dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Merging
// ---------------------------------------------------------------------------

void MergeRecipe::validate() const {
  if (experts.empty()) throw DimensionError("merge recipe has no experts");
  if (experts.size() != alpha.size())
    throw DimensionError("merge recipe: " + std::to_string(experts.size()) + " experts but " +
                         std::to_string(alpha.size()) + " weights");
  for (const auto& e : experts) require_same_size(base, e, "merge");
}

ParameterVector merge(const ParameterVector& base, std::span<const ParameterVector> experts,
                      const SimplexWeights& alpha) {
  if (experts.empty()) throw DimensionError("merge: no experts");
  if (experts.size() != alpha.size())
    throw DimensionError("merge: " + std::to_string(experts.size()) + " experts but " +
                         std::to_string(alpha.size()) + " weights");
  for (const auto& e : experts) require_same_size(base, e, "merge");

  if (const std::size_t k = alpha.corner_index(); k < alpha.size()) return experts[k];

  ParameterVector out = base;
  for (std::size_t k = 0; k < experts.size(); ++k) {
    const double a = alpha[k];
    if (a == 0.0) continue;
    const auto& e = experts[k];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * (e[i] - base[i]);
  }
  require_finite(out, "merge");
  return out;
}

ParameterVector merge(const MergeRecipe& recipe) {
  recipe.validate();
  return merge(recipe.base, recipe.experts, recipe.alpha);
}

ParameterVector soup(std::span<const ParameterVector> checkpoints) {
  if (checkpoints.empty()) throw InvalidArgument("soup of an empty checkpoint list");
  return merge(ParameterVector(checkpoints.front().size()), checkpoints,
               SimplexWeights::uniform(checkpoints.size()));
}

std::vector<ParameterVector> select_top_checkpoints(std::span<const TrajectoryPoint> trajectory,
                                                    std::span<const double> scores,
                                                    std::size_t n) {
  if (scores.size() != trajectory.size())
    throw DimensionError("select_top_checkpoints: one score per checkpoint required");
  if (n < 1 || n > trajectory.size())
    throw InvalidArgument("select_top_checkpoints: n=" + std::to_string(n) + " out of range [1, " +
                          std::to_string(trajectory.size()) + "]");
  std::vector<std::size_t> order(trajectory.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return trajectory[a].step < trajectory[b].step;
  });
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<ParameterVector> out;
  out.reserve(n);
  for (std::size_t i : order) out.push_back(trajectory[i].params);
  return out;
}

ParameterVector simulate_anneal(const ExpertArtifact& artifact, AnnealMode mode,
                                const CheckpointScorer& scorer) {
  const auto& traj = artifact.trajectory;
  if (mode.count < 1 || mode.count > traj.size())
    throw InvalidArgument("simulate_anneal: requested " + std::to_string(mode.count) +
                          " checkpoints of " + std::to_string(traj.size()));
  if (mode.kind == AnnealMode::Kind::window) {
    std::vector<ParameterVector> tail;
    for (std::size_t i = traj.size() - mode.count; i < traj.size(); ++i)
      tail.push_back(traj[i].params);
    if (tail.size() == 1) return tail.front();
    return soup(tail);
  }
  if (!scorer) throw InvalidArgument("simulate_anneal: top-n mode needs a scorer");
  std::vector<double> scores;
  scores.reserve(traj.size());
  for (const auto& p : traj) scores.push_back(scorer(p.params));
  auto picked = select_top_checkpoints(traj, scores, mode.count);
  if (picked.size() == 1) return picked.front();
  return soup(picked);
}

}  // namespace mergemix
