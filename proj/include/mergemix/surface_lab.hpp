#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mergemix/boosted_trees.hpp"
#include "mergemix/domain_world.hpp"
#include "mergemix/expert_forge.hpp"
#include "mergemix/merge_engine.hpp"
#include "mergemix/metrics_stats.hpp"
#include "mergemix/simplex.hpp"

namespace mergemix {

// ---------------------------------------------------------------------------
// Seed design
// ---------------------------------------------------------------------------

enum class Provenance { corner, prior, grid, random };
std::string to_string(Provenance p);

struct SeedDesign {
  std::vector<SimplexWeights> configs;
  std::vector<Provenance> provenance;
  std::size_t size() const noexcept { return configs.size(); }
};

/// K corners, then the supplied priors, then the 1/4-resolution simplex grid
/// (seeded subsample when it does not fit), then Dirichlet(1,...,1) draws
/// until exactly n distinct configs exist.
SeedDesign sample_seed_configs(std::size_t k, std::size_t n,
                               const std::vector<SimplexWeights>& priors, std::uint64_t seed);

/// All points of the simplex with coordinates in multiples of 1/divisions,
/// in ascending lexicographic order.
std::vector<SimplexWeights> simplex_lattice(std::size_t k, std::size_t divisions);
std::size_t simplex_lattice_size(std::size_t k, std::size_t divisions);

/// `count` seeded Dirichlet(1,...,1) draws.
std::vector<SimplexWeights> dirichlet_configs(std::size_t k, std::size_t count,
                                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Candidate construction and sampling
// ---------------------------------------------------------------------------

/// Builds candidates anchor + scale * sum_k alpha_k (component_k - base).
/// Without an anchor and with unit scale this is exactly merge().
struct MergeProblem {
  ParameterVector base;
  std::vector<ParameterVector> components;
  std::optional<ParameterVector> anchor;
  double scale = 1.0;

  static MergeProblem flat(ParameterVector base, std::vector<ParameterVector> experts);
  std::size_t k() const noexcept { return components.size(); }
  ParameterVector build(const SimplexWeights& alpha) const;
};

struct SurfaceSample {
  SimplexWeights alpha;
  std::vector<double> raw;
  std::vector<double> y;  // normalized scores, in [0, 1]
  std::string digest;     // merged-model digest
};

struct SampleSet {
  std::vector<SurfaceSample> samples;
  NormalizationContext context;
  std::vector<std::string> capability_names;
};

/// Merges and evaluates every design point; the population of raw scores
/// defines the normalization context.
SampleSet collect_samples(const MergeProblem& problem, const World& world,
                          const ModelSpec& model, const SeedDesign& design,
                          std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Surface model
// ---------------------------------------------------------------------------

struct SurfaceModel {
  std::size_t k = 0;
  std::vector<BoostedEnsemble> regressors;  // one per capability
  std::vector<std::string> capability_names;
  BoostingParams params;
  std::string training_digest;

  std::size_t capability_count() const noexcept { return regressors.size(); }
  bool operator==(const SurfaceModel&) const = default;
};

SurfaceModel fit_surface(const SampleSet& samples, const BoostingParams& params);

std::vector<double> predict(const SurfaceModel& model, const SimplexWeights& alpha);

/// Largest |prediction - target| per capability over the training samples.
std::vector<double> training_error(const SurfaceModel& model, const SampleSet& samples);

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

struct SearchOptions {
  double resolution = 0.05;
  std::size_t max_points = 2'000'000;
  std::size_t threads = 1;
};

struct SearchResult {
  SimplexWeights alpha;
  double utility = 0.0;
  std::size_t lattice_points = 0;
  std::size_t refined_points = 0;
  double refined_step = 0.0;
};

using SimplexObjective = std::function<double(const SimplexWeights&)>;

/// Exhaustive lattice at `resolution`, then one pass over the resolution/5
/// lattice within one coarse step of the best point. Ties go to the
/// lexicographically smallest alpha. Throws BudgetError when the lattice
/// exceeds max_points.
SearchResult search_optimum(const SimplexObjective& objective, std::size_t k,
                            const SearchOptions& options);
SearchResult search_optimum(const SurfaceModel& model, const UtilitySpec& utility_spec,
                            const SearchOptions& options);

struct VerificationReport {
  SimplexWeights alpha;
  std::vector<double> predicted;
  std::vector<double> actual_raw;
  std::vector<double> actual;
  std::vector<double> gap;  // |predicted - actual|
  double predicted_utility = 0.0;
  double actual_utility = 0.0;
  std::string merged_digest;
  bool operator==(const VerificationReport&) const = default;
};

/// Merges at alpha, evaluates every capability and normalizes with `context`.
VerificationReport verify_optimum(const SimplexWeights& alpha, const SurfaceModel& surface,
                                  const UtilitySpec& utility_spec, const MergeProblem& problem,
                                  const World& world, const ModelSpec& model,
                                  const NormalizationContext& context);

// ---------------------------------------------------------------------------
// Pipeline pieces
// ---------------------------------------------------------------------------

struct SearchSettings {
  std::size_t seed_count = 40;
  std::vector<SimplexWeights> priors;
  BoostingParams boosting;
  UtilitySpec utility;
  SearchOptions search;
  std::uint64_t seed = 0;
};

struct SurfaceRun {
  SeedDesign design;
  SampleSet samples;
  SurfaceModel surface;
  SearchResult optimum;
  VerificationReport verification;
};

/// design -> samples -> fit -> search -> verify over one merge problem.
SurfaceRun run_surface_search(const MergeProblem& problem, const World& world,
                              const ModelSpec& model, const SearchSettings& settings,
                              std::size_t threads = 1);

struct UtilityPoint {
  long long step = 0;
  double utility = 0.0;
};

struct RecalibrationReport {
  SimplexWeights alpha_old;
  SimplexWeights alpha_new;
  double distance_inf = 0.0;
  std::vector<UtilityPoint> static_curve;   // continue with alpha_old
  std::vector<UtilityPoint> dynamic_curve;  // continue with alpha_new
  SurfaceRun rerun;
};

/// Re-runs experts -> surface -> search from `midpoint`, then continues
/// mixed training for `remaining_steps` under both mixtures. Utilities use
/// the original run's normalization context.
RecalibrationReport recalibrate(const ParameterVector& midpoint, long long remaining_steps,
                                const World& world, const ModelSpec& model,
                                const TrainConfig& config, const SearchSettings& settings,
                                const SurfaceRun& original, std::size_t threads = 1);

}  // namespace mergemix
