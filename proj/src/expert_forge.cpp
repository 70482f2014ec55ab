#include "mergemix/expert_forge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mergemix/metrics_stats.hpp"
#include "mergemix/parallel.hpp"

namespace mergemix {

namespace {

// Endless shuffled stream of mini-batches over one dataset.
class BatchStream {
 public:
  BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
      : order_(dataset_size), batch_(batch_size), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  std::span<const std::size_t> next() {
    if (cursor_ + batch_ > order_.size()) reshuffle();
    std::span<const std::size_t> out(order_.data() + cursor_, batch_);
    cursor_ += batch_;
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

std::uint64_t stream_seed(std::uint64_t seed, std::size_t domain) {
  return seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL * (domain + 1);
}

bool uses_minibatch(const ModelSpec& model, const TrainConfig& config) {
  return !model.is_quadratic() && config.batch_size > 0;
}

TrajectoryPoint checkpoint(const World& world, const ModelSpec& model, long long step,
                           const ParameterVector& theta) {
  TrajectoryPoint p;
  p.step = step;
  p.params = theta;
  const auto raw = world.raw_scores(model, theta);
  for (std::size_t m = 0; m < raw.size(); ++m)
    p.scores.push_back({world.capabilities()[m].name, raw[m], 0.5});
  return p;
}

// Shared descent loop: `gradient(step, theta)` supplies the update direction.
template <typename GradientFn>
ExpertArtifact descend(const World& world, const ModelSpec& model, const ParameterVector& base,
                       const TrainConfig& config, std::string name, GradientFn gradient) {
  config.validate();
  model.check_params(base, "train");
  ExpertArtifact art;
  art.domain = std::move(name);
  art.config = config;
  art.base_digest = digest(base);

  std::vector<double> theta = base.values();
  art.trajectory.push_back(checkpoint(world, model, 0, base));
  for (long long t = 0; t < config.steps; ++t) {
    const long long step = t + 1;
    // overflow in a gradient or a checkpoint loss is divergence too
    try {
      const ParameterVector current(theta);
      const ParameterVector g = gradient(t, current);
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * g[i];
      if (!all_finite(theta)) throw NumericError("non-finite parameters");
      if (step % config.checkpoint_interval == 0 || step == config.steps)
        art.trajectory.push_back(checkpoint(world, model, step, ParameterVector(theta)));
    } catch (const NumericError& e) {
      throw TrainingError("training diverged on '" + art.domain + "': " + e.what(), step);
    }
  }
  art.final_params = art.trajectory.back().params;
  normalize_trajectory_scores(art);
  return art;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning rate must be > 0");
  if (steps < 0) throw InvalidArgument("training steps must be >= 0");
  if (checkpoint_interval < 1) throw InvalidArgument("checkpoint interval must be >= 1");
}

ExpertArtifact train_expert(const World& world, const ModelSpec& model,
                            const ParameterVector& base, std::size_t domain,
                            const TrainConfig& config) {
  if (domain >= world.domain_count()) throw InvalidArgument("train_expert: domain out of range");
  const auto& spec = world.domains()[domain];
  model.check_domain(spec);
  const auto& data = world.train_data(domain);
  if (uses_minibatch(model, config)) {
    const std::size_t batch = std::min(config.batch_size, data.size());
    BatchStream stream(data.size(), batch, stream_seed(config.seed, domain));
    return descend(world, model, base, config, spec.name,
                   [&](long long, const ParameterVector& theta) {
                     return grad_batch(model, spec, data, theta, stream.next());
                   });
  }
  return descend(world, model, base, config, spec.name,
                 [&](long long, const ParameterVector& theta) {
                   return grad(model, spec, data, theta);
                 });
}

ExpertArtifact train_on_mixture(const World& world, const ModelSpec& model,
                                const ParameterVector& base, const SimplexWeights& lambda,
                                const TrainConfig& config) {
  const std::size_t k_count = world.domain_count();
  if (lambda.size() != k_count)
    throw DimensionError("train_on_mixture: mixture has " + std::to_string(lambda.size()) +
                         " weights for " + std::to_string(k_count) + " domains");
  for (const auto& d : world.domains()) model.check_domain(d);

  ExpertArtifact art;
  if (uses_minibatch(model, config)) {
    std::vector<BatchStream> streams;
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t n = world.train_data(k).size();
      streams.emplace_back(n, std::min(config.batch_size, n), stream_seed(config.seed, k));
    }
    std::mt19937_64 picker(config.seed ^ 0xd1b54a32d192ed03ULL);
    std::discrete_distribution<std::size_t> choose(lambda.begin(), lambda.end());
    art = descend(world, model, base, config, "mixture",
                  [&](long long, const ParameterVector& theta) {
                    const std::size_t k = lambda.corner_index() < k_count ? lambda.corner_index()
                                                                          : choose(picker);
                    return grad_batch(model, world.domains()[k], world.train_data(k), theta,
                                      streams[k].next());
                  });
  } else {
    art = descend(world, model, base, config, "mixture",
                  [&](long long, const ParameterVector& theta) {
                    ParameterVector g(theta.size());
                    for (std::size_t k = 0; k < k_count; ++k) {
                      if (lambda[k] == 0.0) continue;
                      const auto gk = grad(model, world.domains()[k], world.train_data(k), theta);
                      for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda[k] * gk[i];
                    }
                    return g;
                  });
  }
  art.mixture = lambda;
  return art;
}

std::vector<ExpertArtifact> train_all_experts(const World& world, const ModelSpec& model,
                                              const ParameterVector& base,
                                              const TrainConfig& config, std::size_t threads) {
  std::vector<ExpertArtifact> experts(world.domain_count());
  parallel_for(world.domain_count(), threads, [&](std::size_t k) {
    experts[k] = train_expert(world, model, base, k, config);
  });
  return experts;
}

long long restricted_horizon_steps(const World& world, const ModelSpec& model,
                                   const ParameterVector& base, double learning_rate) {
  if (!model.is_quadratic())
    throw InvalidArgument("restricted horizon default is only defined for quadratic worlds");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  double max_grad = 0.0;
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < world.domain_count(); ++k) {
    const auto& spec = world.domains()[k];
    max_grad = std::max(max_grad, norm2(grad(model, spec, world.train_data(k), base)));
    min_dist = std::min(min_dist, norm2(base - spec.quadratic().minimizer));
  }
  if (max_grad == 0.0) return 1;
  const double steps = std::floor(0.5 * min_dist / (learning_rate * max_grad) + 1e-12);
  return std::max(1LL, static_cast<long long>(steps));
}

void normalize_trajectory_scores(ExpertArtifact& artifact) {
  if (artifact.trajectory.empty()) return;
  const std::size_t m_count = artifact.trajectory.front().scores.size();
  for (std::size_t m = 0; m < m_count; ++m) {
    ScoreRange range{artifact.trajectory.front().scores[m].raw,
                     artifact.trajectory.front().scores[m].raw};
    for (const auto& p : artifact.trajectory) {
      range.min = std::min(range.min, p.scores[m].raw);
      range.max = std::max(range.max, p.scores[m].raw);
    }
    for (auto& p : artifact.trajectory)
      p.scores[m].normalized = normalize_scores({p.scores[m].raw}, range).front();
  }
}

}  // namespace mergemix
