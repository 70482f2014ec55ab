#include "mergemix/theory_probe.hpp"

#include <algorithm>
#include <cmath>

#include "mergemix/merge_engine.hpp"
#include "mergemix/parallel.hpp"

namespace mergemix {

namespace {

void check_lambda(const TaylorContext& ctx, const SimplexWeights& lambda) {
  if (lambda.size() != ctx.k())
    throw DimensionError("Taylor context has " + std::to_string(ctx.k()) + " domains but lambda has " +
                         std::to_string(lambda.size()) + " weights");
}

void check_table(const TaylorContext& ctx, const ResponseTable& r) {
  if (r.size() != ctx.k()) throw DimensionError("response table does not match the context");
  for (const auto& row : r)
    if (row.size() != ctx.k()) throw DimensionError("response table does not match the context");
}

// theta0 - hT sum lambda_k g_k
ParameterVector first_order(const TaylorContext& ctx, const SimplexWeights& lambda) {
  ParameterVector out = ctx.theta0;
  for (std::size_t k = 0; k < ctx.k(); ++k) {
    const double c = ctx.horizon * lambda[k];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * ctx.gradients[k][i];
  }
  return out;
}

void add_scaled(ParameterVector& acc, double c, const ParameterVector& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * v[i];
}

ParameterVector unit(const ParameterVector& v) {
  const double n = norm2(v);
  return (1.0 / n) * v;
}

}  // namespace

void TaylorContext::validate() const {
  if (gradients.empty()) throw DimensionError("Taylor context needs at least one domain");
  for (const auto& g : gradients) require_same_size(theta0, g, "Taylor context gradient");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw InvalidArgument("effective horizon eta*T must be > 0");
  if (!hessian) throw InvalidArgument("Taylor context has no Hessian access");
}

TaylorContext make_taylor_context(const World& world, const ModelSpec& model,
                                  const ParameterVector& theta0, double horizon) {
  world.check_model(model);
  model.check_params(theta0, "make_taylor_context");
  TaylorContext ctx;
  ctx.theta0 = theta0;
  ctx.horizon = horizon;
  for (std::size_t k = 0; k < world.domain_count(); ++k)
    ctx.gradients.push_back(grad(model, world.domains()[k], world.train_data(k), theta0));
  const World* w = &world;
  ctx.hessian = [w, model, theta0](std::size_t k, const ParameterVector& v) {
    return hvp(DifferentialQuery{model, w->domains()[k], w->train_data(k), theta0, v, std::nullopt});
  };
  ctx.validate();
  return ctx;
}

ResponseTable curvature_responses(const TaylorContext& ctx, std::size_t threads) {
  ctx.validate();
  const std::size_t k = ctx.k();
  std::vector<ParameterVector> flat(k * k);
  parallel_for(k * k, threads, [&](std::size_t idx) {
    flat[idx] = ctx.hessian(idx / k, ctx.gradients[idx % k]);
    require_same_size(ctx.theta0, flat[idx], "Hessian-vector product");
  });
  ResponseTable table(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) table[a].push_back(std::move(flat[a * k + b]));
  return table;
}

ParameterVector predict_mix_params(const TaylorContext& ctx, const ResponseTable& r,
                                   const SimplexWeights& lambda) {
  check_lambda(ctx, lambda);
  check_table(ctx, r);
  const double half_h2 = 0.5 * ctx.horizon * ctx.horizon;
  ParameterVector out = first_order(ctx, lambda);
  for (std::size_t k = 0; k < ctx.k(); ++k)
    for (std::size_t j = 0; j < ctx.k(); ++j)
      add_scaled(out, half_h2 * lambda[k] * lambda[j], r[k][j]);
  require_finite(out, "predict_mix_params");
  return out;
}

ParameterVector predict_mix_params(const TaylorContext& ctx, const SimplexWeights& lambda) {
  check_lambda(ctx, lambda);
  return predict_mix_params(ctx, curvature_responses(ctx), lambda);
}

ParameterVector predict_merge_params(const TaylorContext& ctx, const ResponseTable& r,
                                     const SimplexWeights& lambda) {
  check_lambda(ctx, lambda);
  check_table(ctx, r);
  const double half_h2 = 0.5 * ctx.horizon * ctx.horizon;
  ParameterVector out = first_order(ctx, lambda);
  for (std::size_t k = 0; k < ctx.k(); ++k) add_scaled(out, half_h2 * lambda[k], r[k][k]);
  require_finite(out, "predict_merge_params");
  return out;
}

ParameterVector predict_merge_params(const TaylorContext& ctx, const SimplexWeights& lambda) {
  check_lambda(ctx, lambda);
  return predict_merge_params(ctx, curvature_responses(ctx), lambda);
}

DiscrepancyReport discrepancy_delta(const TaylorContext& ctx, const ResponseTable& r,
                                    const SimplexWeights& lambda) {
  check_lambda(ctx, lambda);
  check_table(ctx, r);
  const double half_h2 = 0.5 * ctx.horizon * ctx.horizon;
  const std::size_t p = ctx.theta0.size();
  DiscrepancyReport rep;
  rep.cross = ParameterVector(p);
  rep.self = ParameterVector(p);
  for (std::size_t k = 0; k < ctx.k(); ++k) {
    for (std::size_t j = 0; j < ctx.k(); ++j) {
      if (j == k) continue;
      add_scaled(rep.cross, half_h2 * lambda[k] * lambda[j], r[k][j]);
    }
    add_scaled(rep.self, half_h2 * (lambda[k] * lambda[k] - lambda[k]), r[k][k]);
  }
  // Same quantity as cross + self once sum(lambda) = 1, written over response
  // differences so that identical domains give an exactly zero delta.
  rep.delta = ParameterVector(p);
  for (std::size_t k = 0; k < ctx.k(); ++k) {
    for (std::size_t j = 0; j < ctx.k(); ++j) {
      if (j == k) continue;
      add_scaled(rep.delta, half_h2 * lambda[k] * lambda[j], r[k][j] - r[k][k]);
    }
  }

  const auto mix = predict_mix_params(ctx, r, lambda);
  const auto mrg = predict_merge_params(ctx, r, lambda);
  double scale = 1.0;
  for (std::size_t i = 0; i < p; ++i) {
    rep.identity_error = std::max(rep.identity_error, std::abs(mix[i] - mrg[i] - rep.delta[i]));
    scale = std::max({scale, std::abs(mix[i]), std::abs(mrg[i])});
  }
  if (rep.identity_error > 1e-12 * scale)
    throw NumericError("discrepancy identity violated by " + std::to_string(rep.identity_error));
  return rep;
}

DiscrepancyReport discrepancy_delta(const TaylorContext& ctx, const SimplexWeights& lambda) {
  check_lambda(ctx, lambda);
  return discrepancy_delta(ctx, curvature_responses(ctx), lambda);
}

ScalingReport validate_order(const World& world, const ModelSpec& model,
                             const ParameterVector& base, const SimplexWeights& lambda,
                             double horizon, long long steps) {
  if (!model.is_quadratic()) throw InvalidArgument("validate_order needs a quadratic world");
  if (lambda.size() != world.domain_count())
    throw DimensionError("validate_order: lambda does not match the domain count");
  if (!(horizon > 0.0)) throw InvalidArgument("validate_order: horizon must be > 0");
  if (steps < 1) throw InvalidArgument("validate_order: steps must be >= 1");

  ScalingReport rep;
  rep.lambda = lambda;
  for (double h : {horizon, 0.5 * horizon}) {
    TrainConfig cfg;
    cfg.learning_rate = h / static_cast<double>(steps);
    cfg.steps = steps;
    cfg.checkpoint_interval = steps;
    const auto mixed = train_on_mixture(world, model, base, lambda, cfg).final_params;
    std::vector<ParameterVector> experts;
    for (std::size_t k = 0; k < world.domain_count(); ++k)
      experts.push_back(train_expert(world, model, base, k, cfg).final_params);
    const auto merged = merge(base, experts, lambda);

    const auto observed = mixed - merged;
    const auto delta = discrepancy_delta(make_taylor_context(world, model, base, h), lambda).delta;
    HorizonPoint pt;
    pt.horizon = h;
    pt.learning_rate = cfg.learning_rate;
    pt.steps = steps;
    pt.error = norm2(observed);
    pt.delta_norm = norm2(delta);
    pt.residual = norm2(observed - delta);
    rep.points.push_back(pt);
  }
  if (rep.points[1].error > 0.0) rep.error_ratio = rep.points[0].error / rep.points[1].error;
  if (rep.points[1].residual > 0.0)
    rep.residual_ratio = rep.points[0].residual / rep.points[1].residual;
  return rep;
}

CurvatureMatrix gamma_matrix(const TaylorContext& ctx) {
  ctx.validate();
  const std::size_t k = ctx.k();
  std::vector<ParameterVector> dirs;
  for (std::size_t j = 0; j < k; ++j) {
    if (norm2(ctx.gradients[j]) == 0.0)
      throw DegenerateError("gamma: gradient of domain " + std::to_string(j) + " is zero");
    dirs.push_back(unit(ctx.gradients[j]));
  }
  // response[a][b] = |H_a g_b| / |g_b|
  Eigen::MatrixXd response(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) response(a, b) = norm2(ctx.hessian(a, dirs[b]));

  CurvatureMatrix out;
  out.gamma = Eigen::MatrixXd::Ones(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    if (response(a, a) == 0.0)
      throw DegenerateError("gamma: domain " + std::to_string(a) +
                            " has zero curvature response along its own gradient");
    for (std::size_t b = 0; b < k; ++b)
      if (b != a) out.gamma(a, b) = response(a, b) / response(a, a);
    double off = 0.0;
    for (std::size_t b = 0; b < k; ++b)
      if (b != a) off += out.gamma(a, b);
    out.diagonally_dominant.push_back(out.gamma(a, a) >= off);
  }
  return out;
}

Eigen::MatrixXd task_vector_cosine(const std::vector<ParameterVector>& experts,
                                   const ParameterVector& base) {
  if (experts.empty()) throw InvalidArgument("task_vector_cosine: no experts");
  std::vector<ParameterVector> tv;
  for (std::size_t k = 0; k < experts.size(); ++k) {
    require_same_size(base, experts[k], "task_vector_cosine");
    tv.push_back(experts[k] - base);
    if (norm2(tv.back()) == 0.0)
      throw DegenerateError("task vector " + std::to_string(k) + " is zero");
  }
  const auto n = static_cast<Eigen::Index>(tv.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double v = dot(tv[a], tv[b]) / (norm2(tv[a]) * norm2(tv[b]));
      c(a, b) = c(b, a) = std::clamp(v, -1.0, 1.0);
    }
  return c;
}

Eigen::MatrixXd task_vector_cosine(const std::vector<ExpertArtifact>& experts,
                                   const ParameterVector& base) {
  std::vector<ParameterVector> p;
  for (const auto& e : experts) p.push_back(e.final_params);
  return task_vector_cosine(p, base);
}

}  // namespace mergemix
