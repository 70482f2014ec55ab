#include "mergemix/surface_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "mergemix/parallel.hpp"

namespace mergemix {

namespace {

using Counts = std::vector<std::uint32_t>;

SimplexWeights from_counts(const Counts& c, std::size_t denominator) {
  std::vector<double> w(c.size());
  const double d = static_cast<double>(denominator);
  for (std::size_t i = 0; i < c.size(); ++i) w[i] = static_cast<double>(c[i]) / d;
  return SimplexWeights(std::move(w));
}

// Every composition of `total` into c.size() parts with lo[i] <= c[i] <= hi[i],
// visited in ascending lexicographic order.
template <typename Visit>
void enumerate_compositions(std::size_t total, const Counts& lo, const Counts& hi, Visit&& visit) {
  const std::size_t k = lo.size();
  Counts c(k, 0);
  // suffix sums of bounds for pruning
  std::vector<std::size_t> lo_suffix(k + 1, 0), hi_suffix(k + 1, 0);
  for (std::size_t i = k; i-- > 0;) {
    lo_suffix[i] = lo_suffix[i + 1] + lo[i];
    hi_suffix[i] = hi_suffix[i + 1] + hi[i];
  }
  auto rec = [&](auto&& self, std::size_t i, std::size_t remaining) -> void {
    if (i + 1 == k) {
      if (remaining >= lo[i] && remaining <= hi[i]) {
        c[i] = static_cast<std::uint32_t>(remaining);
        visit(c);
      }
      return;
    }
    for (std::size_t v = lo[i]; v <= hi[i] && v <= remaining; ++v) {
      const std::size_t rest = remaining - v;
      if (rest < lo_suffix[i + 1] || rest > hi_suffix[i + 1]) continue;
      c[i] = static_cast<std::uint32_t>(v);
      self(self, i + 1, rest);
    }
  };
  if (k == 0) return;
  rec(rec, 0, total);
}

std::size_t divisions_for(double resolution) {
  if (!(resolution > 0.0 && resolution <= 0.25))
    throw InvalidArgument("search resolution must be in (0, 0.25]");
  return static_cast<std::size_t>(std::ceil(1.0 / resolution - 1e-9));
}

bool is_duplicate(const std::vector<SimplexWeights>& existing, const SimplexWeights& a) {
  return std::any_of(existing.begin(), existing.end(),
                     [&](const SimplexWeights& e) { return distance_inf(e, a) <= 1e-9; });
}

SimplexWeights draw_dirichlet(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(k);
  double sum = 0.0;
  for (auto& x : w) {
    x = -std::log1p(-u(rng));  // Gamma(1) = Exp(1)
    sum += x;
  }
  for (auto& x : w) x /= sum;
  return SimplexWeights(std::move(w));
}

std::string samples_digest(const std::vector<SurfaceSample>& samples) {
  std::vector<unsigned char> bytes;
  auto push = [&](double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  };
  for (const auto& s : samples) {
    for (double a : s.alpha) push(a);
    for (double y : s.y) push(y);
  }
  return digest_bytes(bytes);
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::corner: return "corner";
    case Provenance::prior: return "prior";
    case Provenance::grid: return "grid";
    case Provenance::random: return "random";
  }
  return "random";
}

std::size_t simplex_lattice_size(std::size_t k, std::size_t divisions) {
  // C(divisions + k - 1, k - 1), saturating
  if (k == 0) return 0;
  long double r = 1.0L;
  for (std::size_t i = 1; i < k; ++i) {
    r = r * static_cast<long double>(divisions + i) / static_cast<long double>(i);
    if (r > 1e18L) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(std::llround(r));
}

std::vector<SimplexWeights> simplex_lattice(std::size_t k, std::size_t divisions) {
  if (k == 0 || divisions == 0) throw InvalidArgument("simplex lattice needs k >= 1, divisions >= 1");
  std::vector<SimplexWeights> out;
  out.reserve(simplex_lattice_size(k, divisions));
  enumerate_compositions(divisions, Counts(k, 0), Counts(k, static_cast<std::uint32_t>(divisions)),
                         [&](const Counts& c) { out.push_back(from_counts(c, divisions)); });
  return out;
}

std::vector<SimplexWeights> dirichlet_configs(std::size_t k, std::size_t count,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SimplexWeights> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw_dirichlet(k, rng));
  return out;
}

SeedDesign sample_seed_configs(std::size_t k, std::size_t n,
                               const std::vector<SimplexWeights>& priors, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("seed design needs K >= 2");
  if (n < k + 1)
    throw InvalidArgument("seed design of size " + std::to_string(n) + " cannot hold " +
                          std::to_string(k) + " corners plus one interior point");
  SeedDesign d;
  auto add = [&](const SimplexWeights& a, Provenance p) {
    if (d.configs.size() >= n || is_duplicate(d.configs, a)) return;
    d.configs.push_back(a);
    d.provenance.push_back(p);
  };
  for (std::size_t i = 0; i < k; ++i) add(SimplexWeights::one_hot(k, i), Provenance::corner);
  for (const auto& p : priors) {
    if (p.size() != k) throw DimensionError("prior mixture has wrong dimension");
    add(p, Provenance::prior);
  }

  std::vector<SimplexWeights> grid;
  for (auto& g : simplex_lattice(k, 4))
    if (g.corner_index() == k && !is_duplicate(d.configs, g)) grid.push_back(std::move(g));
  std::mt19937_64 rng(seed);
  // The grid takes at most half of the free slots; random draws fill the rest so
  // tree splits do not all land on the grid midpoints.
  const std::size_t room = (n - d.configs.size()) / 2;
  if (grid.size() > room) {
    std::vector<std::size_t> idx(grid.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(room);
    std::sort(idx.begin(), idx.end());
    std::vector<SimplexWeights> kept;
    for (auto i : idx) kept.push_back(grid[i]);
    grid = std::move(kept);
  }
  for (const auto& g : grid) add(g, Provenance::grid);

  while (d.configs.size() < n) add(draw_dirichlet(k, rng), Provenance::random);
  return d;
}

MergeProblem MergeProblem::flat(ParameterVector base, std::vector<ParameterVector> experts) {
  MergeProblem p;
  p.base = std::move(base);
  p.components = std::move(experts);
  return p;
}

ParameterVector MergeProblem::build(const SimplexWeights& alpha) const {
  if (!anchor && scale == 1.0) return merge(base, components, alpha);
  if (alpha.size() != components.size()) throw DimensionError("merge problem: weight count mismatch");
  ParameterVector out = anchor ? *anchor : base;
  require_same_size(out, base, "merge problem anchor");
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (alpha[k] == 0.0) continue;
    const double coef = scale * alpha[k];
    const auto& c = components[k];
    require_same_size(c, base, "merge problem component");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coef * (c[i] - base[i]);
  }
  require_finite(out, "merge problem");
  return out;
}

SampleSet collect_samples(const MergeProblem& problem, const World& world,
                          const ModelSpec& model, const SeedDesign& design,
                          std::size_t threads) {
  for (const auto& a : design.configs) {
    if (a.size() != problem.k()) throw DimensionError("design dimension does not match experts");
  }
  SampleSet set;
  set.samples.resize(design.size());
  parallel_for(design.size(), threads, [&](std::size_t i) {
    auto& s = set.samples[i];
    s.alpha = design.configs[i];
    const auto theta = problem.build(s.alpha);
    s.raw = world.raw_scores(model, theta);
    s.digest = digest(theta);
  });
  std::vector<std::vector<double>> raws;
  raws.reserve(set.samples.size());
  for (const auto& s : set.samples) raws.push_back(s.raw);
  set.context = NormalizationContext::from_population(raws);
  for (auto& s : set.samples) s.y = set.context.normalize(s.raw);
  for (const auto& c : world.capabilities()) set.capability_names.push_back(c.name);
  return set;
}

SurfaceModel fit_surface(const SampleSet& samples, const BoostingParams& params) {
  if (samples.samples.empty()) throw InvalidArgument("fit_surface: no samples");
  const std::size_t k = samples.samples.front().alpha.size();
  const std::size_t m = samples.samples.front().y.size();
  if (m == 0) throw DimensionError("fit_surface: samples carry no capability scores");
  if (samples.samples.size() < k + 1)
    throw InvalidArgument("fit_surface: need at least K+1 = " + std::to_string(k + 1) +
                          " samples, got " + std::to_string(samples.samples.size()));
  std::vector<std::vector<double>> rows;
  for (const auto& s : samples.samples) {
    if (s.alpha.size() != k || s.y.size() != m)
      throw DimensionError("fit_surface: inconsistent sample dimensions");
    rows.push_back(s.alpha.values());
  }
  SurfaceModel model;
  model.k = k;
  model.params = params;
  model.capability_names = samples.capability_names;
  if (model.capability_names.size() != m) {
    model.capability_names.clear();
    for (std::size_t j = 0; j < m; ++j) model.capability_names.push_back("y" + std::to_string(j + 1));
  }
  std::vector<double> targets(samples.samples.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < samples.samples.size(); ++i) targets[i] = samples.samples[i].y[j];
    model.regressors.push_back(BoostedEnsemble::fit(rows, targets, params));
  }
  model.training_digest = samples_digest(samples.samples);
  return model;
}

std::vector<double> predict(const SurfaceModel& model, const SimplexWeights& alpha) {
  if (alpha.size() != model.k)
    throw DimensionError("predict: expected " + std::to_string(model.k) + " weights, got " +
                         std::to_string(alpha.size()));
  std::vector<double> y(model.regressors.size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = model.regressors[j].predict(alpha.span());
  return y;
}

std::vector<double> training_error(const SurfaceModel& model, const SampleSet& samples) {
  std::vector<double> err(model.capability_count(), 0.0);
  for (const auto& s : samples.samples) {
    const auto p = predict(model, s.alpha);
    for (std::size_t j = 0; j < err.size(); ++j) err[j] = std::max(err[j], std::abs(p[j] - s.y[j]));
  }
  return err;
}

SearchResult search_optimum(const SimplexObjective& objective, std::size_t k,
                            const SearchOptions& options) {
  if (k < 1) throw InvalidArgument("search needs K >= 1");
  const std::size_t divisions = divisions_for(options.resolution);
  const std::size_t lattice_size = simplex_lattice_size(k, divisions);
  if (lattice_size > options.max_points)
    throw BudgetError("simplex lattice has " + std::to_string(lattice_size) +
                      " points, over the budget of " + std::to_string(options.max_points));

  // Coarse lattice, stored as counts over the fine denominator for tie-breaks.
  constexpr std::uint32_t kRefine = 5;
  const std::size_t fine = divisions * kRefine;
  std::vector<Counts> points;
  points.reserve(lattice_size);
  enumerate_compositions(divisions, Counts(k, 0), Counts(k, static_cast<std::uint32_t>(divisions)),
                         [&](const Counts& c) { points.push_back(c); });

  auto evaluate_all = [&](const std::vector<Counts>& pts, std::size_t denominator) {
    std::vector<double> u(pts.size());
    parallel_for(pts.size(), options.threads, [&](std::size_t i) {
      u[i] = objective(from_counts(pts[i], denominator));
      if (!std::isfinite(u[i])) throw NumericError("search objective returned a non-finite value");
    });
    return u;
  };

  const auto coarse = evaluate_all(points, divisions);
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (coarse[i] > coarse[best]) best = i;  // enumeration is lexicographic
  }
  Counts best_counts = points[best];
  for (auto& c : best_counts) c *= kRefine;
  double best_u = coarse[best];

  Counts lo(k), hi(k);
  for (std::size_t i = 0; i < k; ++i) {
    lo[i] = best_counts[i] >= kRefine ? best_counts[i] - kRefine : 0;
    hi[i] = std::min<std::uint32_t>(static_cast<std::uint32_t>(fine), best_counts[i] + kRefine);
  }
  std::vector<Counts> refined;
  enumerate_compositions(fine, lo, hi, [&](const Counts& c) { refined.push_back(c); });
  if (points.size() + refined.size() > options.max_points)
    throw BudgetError("refinement pass exceeds the evaluation budget of " +
                      std::to_string(options.max_points));
  const auto fine_u = evaluate_all(refined, fine);
  for (std::size_t i = 0; i < refined.size(); ++i) {
    if (fine_u[i] > best_u || (fine_u[i] == best_u && refined[i] < best_counts)) {
      best_u = fine_u[i];
      best_counts = refined[i];
    }
  }

  SearchResult r;
  r.alpha = from_counts(best_counts, fine);
  r.utility = best_u;
  r.lattice_points = points.size();
  r.refined_points = refined.size();
  r.refined_step = 1.0 / static_cast<double>(fine);
  return r;
}

SearchResult search_optimum(const SurfaceModel& model, const UtilitySpec& utility_spec,
                            const SearchOptions& options) {
  utility_spec.validate(model.capability_count());
  return search_optimum(
      [&](const SimplexWeights& a) {
        const auto y = predict(model, a);
        return utility(y, utility_spec);
      },
      model.k, options);
}

VerificationReport verify_optimum(const SimplexWeights& alpha, const SurfaceModel& surface,
                                  const UtilitySpec& utility_spec, const MergeProblem& problem,
                                  const World& world, const ModelSpec& model,
                                  const NormalizationContext& context) {
  VerificationReport r;
  r.alpha = alpha;
  r.predicted = predict(surface, alpha);
  const auto theta = problem.build(alpha);
  r.merged_digest = digest(theta);
  r.actual_raw = world.raw_scores(model, theta);
  r.actual = context.normalize(r.actual_raw);
  r.gap.resize(r.actual.size());
  for (std::size_t j = 0; j < r.gap.size(); ++j) r.gap[j] = std::abs(r.predicted[j] - r.actual[j]);
  r.predicted_utility = utility(r.predicted, utility_spec);
  r.actual_utility = utility(r.actual, utility_spec);
  return r;
}

SurfaceRun run_surface_search(const MergeProblem& problem, const World& world,
                              const ModelSpec& model, const SearchSettings& settings,
                              std::size_t threads) {
  settings.utility.validate(world.capability_count());
  SurfaceRun run;
  run.design = sample_seed_configs(problem.k(), settings.seed_count, settings.priors, settings.seed);
  run.samples = collect_samples(problem, world, model, run.design, threads);
  BoostingParams boosting = settings.boosting;
  boosting.seed = settings.seed;
  run.surface = fit_surface(run.samples, boosting);
  SearchOptions opts = settings.search;
  opts.threads = threads;
  run.optimum = search_optimum(run.surface, settings.utility, opts);
  run.verification = verify_optimum(run.optimum.alpha, run.surface, settings.utility, problem,
                                    world, model, run.samples.context);
  return run;
}

RecalibrationReport recalibrate(const ParameterVector& midpoint, long long remaining_steps,
                                const World& world, const ModelSpec& model,
                                const TrainConfig& config, const SearchSettings& settings,
                                const SurfaceRun& original, std::size_t threads) {
  if (remaining_steps < 0) throw InvalidArgument("remaining budget must be >= 0");
  model.check_params(midpoint, "recalibrate");
  RecalibrationReport r;
  const auto experts = train_all_experts(world, model, midpoint, config, threads);
  std::vector<ParameterVector> params;
  for (const auto& e : experts) params.push_back(e.final_params);
  r.rerun = run_surface_search(MergeProblem::flat(midpoint, std::move(params)), world, model,
                               settings, threads);
  r.alpha_old = original.optimum.alpha;
  r.alpha_new = r.rerun.optimum.alpha;
  r.distance_inf = distance_inf(r.alpha_old, r.alpha_new);

  TrainConfig cont = config;
  cont.steps = remaining_steps;
  auto curve = [&](const SimplexWeights& lambda) {
    const auto art = train_on_mixture(world, model, midpoint, lambda, cont);
    std::vector<UtilityPoint> pts;
    for (const auto& p : art.trajectory) {
      std::vector<double> raw;
      for (const auto& s : p.scores) raw.push_back(s.raw);
      pts.push_back({p.step, utility(original.samples.context.normalize(raw), settings.utility)});
    }
    return pts;
  };
  r.static_curve = curve(r.alpha_old);
  r.dynamic_curve = curve(r.alpha_new);
  return r;
}

}  // namespace mergemix
