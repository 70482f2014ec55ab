#include "mergemix/consistency.hpp"

#include "mergemix/merge_engine.hpp"
#include "mergemix/parallel.hpp"

namespace mergemix {

ConsistencyReport rank_consistency_experiment(const World& world, const ModelSpec& model,
                                              const ParameterVector& base,
                                              const std::vector<ParameterVector>& experts,
                                              const std::vector<SimplexWeights>& ratios,
                                              const TrainConfig& config,
                                              const UtilitySpec& utility_spec,
                                              std::size_t threads) {
  if (ratios.size() < 3)
    throw InvalidArgument("rank consistency needs at least 3 ratios, got " +
                          std::to_string(ratios.size()));
  if (experts.size() != world.domain_count())
    throw DimensionError("rank consistency: one expert per training domain required");
  utility_spec.validate(world.capability_count());

  ConsistencyReport rep;
  rep.rows.resize(ratios.size());
  parallel_for(ratios.size(), threads, [&](std::size_t i) {
    auto& row = rep.rows[i];
    row.lambda = ratios[i];
    row.merged_raw = world.raw_scores(model, merge(base, experts, ratios[i]));
    const auto trained = train_on_mixture(world, model, base, ratios[i], config);
    row.trained_raw = world.raw_scores(model, trained.final_params);
  });

  std::vector<std::vector<double>> population;
  for (const auto& r : rep.rows) {
    population.push_back(r.merged_raw);
    population.push_back(r.trained_raw);
  }
  rep.context = NormalizationContext::from_population(population);

  std::vector<double> merged, trained;
  for (auto& r : rep.rows) {
    r.merged_score = utility(rep.context.normalize(r.merged_raw), utility_spec);
    r.trained_score = utility(rep.context.normalize(r.trained_raw), utility_spec);
    merged.push_back(r.merged_score);
    trained.push_back(r.trained_score);
    rep.mean_gap += r.trained_score - r.merged_score;
  }
  rep.mean_gap /= static_cast<double>(rep.rows.size());
  rep.correlation = spearman(merged, trained);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    rep.rows[i].merged_rank = rep.correlation.ranks_x[i];
    rep.rows[i].trained_rank = rep.correlation.ranks_y[i];
  }
  return rep;
}

ConsistencyReport rank_consistency_experiment(const World& world, const ModelSpec& model,
                                              const ParameterVector& base,
                                              const std::vector<SimplexWeights>& ratios,
                                              const TrainConfig& config,
                                              const UtilitySpec& utility_spec,
                                              std::size_t threads) {
  if (ratios.size() < 3)
    throw InvalidArgument("rank consistency needs at least 3 ratios, got " +
                          std::to_string(ratios.size()));
  std::vector<ParameterVector> experts;
  for (auto& e : train_all_experts(world, model, base, config, threads))
    experts.push_back(std::move(e.final_params));
  return rank_consistency_experiment(world, model, base, experts, ratios, config, utility_spec,
                                     threads);
}

std::vector<SimplexWeights> two_domain_sweep() {
  std::vector<SimplexWeights> out;
  for (int i = 1; i <= 9; ++i) {
    const double a = i / 10.0;
    out.push_back(SimplexWeights({a, 1.0 - a}));
  }
  return out;
}

}  // namespace mergemix
