#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "mergemix/domain_world.hpp"
#include "mergemix/expert_forge.hpp"
#include "mergemix/model.hpp"
#include "mergemix/param_core.hpp"
#include "mergemix/simplex.hpp"

namespace mergemix {

/// H_k v for domain k.
using HessianAccess = std::function<ParameterVector(std::size_t, const ParameterVector&)>;

/// Expansion point, per-domain gradients, Hessian access and the effective
/// horizon eta*T, which only ever enters as a product.
struct TaylorContext {
  ParameterVector theta0;
  std::vector<ParameterVector> gradients;
  HessianAccess hessian;
  double horizon = 0.0;

  std::size_t k() const noexcept { return gradients.size(); }
  void validate() const;
};

/// Gradients of every training domain at theta0; Hessian access through
/// hvp() on each domain's training split. The world must outlive the
/// context.
TaylorContext make_taylor_context(const World& world, const ModelSpec& model,
                                  const ParameterVector& theta0, double horizon);

/// responses[k][j] = H_k g_j, K^2 Hessian-vector products.
using ResponseTable = std::vector<std::vector<ParameterVector>>;
ResponseTable curvature_responses(const TaylorContext& ctx, std::size_t threads = 1);

/// theta0 - hT sum lambda_k g_k + 1/2 (hT)^2 sum_{k,j} lambda_k lambda_j H_k g_j
ParameterVector predict_mix_params(const TaylorContext& ctx, const SimplexWeights& lambda);
ParameterVector predict_mix_params(const TaylorContext& ctx, const ResponseTable& responses,
                                   const SimplexWeights& lambda);

/// theta0 - hT sum lambda_k g_k + 1/2 (hT)^2 sum_k lambda_k H_k g_k
ParameterVector predict_merge_params(const TaylorContext& ctx, const SimplexWeights& lambda);
ParameterVector predict_merge_params(const TaylorContext& ctx, const ResponseTable& responses,
                                     const SimplexWeights& lambda);

struct DiscrepancyReport {
  ParameterVector delta;  // cross + self
  ParameterVector cross;  // 1/2 (hT)^2 sum_{k != j} lambda_k lambda_j H_k g_j
  ParameterVector self;   // 1/2 (hT)^2 sum_k (lambda_k^2 - lambda_k) H_k g_k
  double identity_error = 0.0;  // |predict_mix - predict_merge - delta|_inf
  std::optional<ParameterVector> observed;  // simulated mix - merge
  std::optional<double> residual_norm;      // |observed - delta|
};

/// Throws NumericError if the identity mix - merge = delta fails beyond
/// round-off.
DiscrepancyReport discrepancy_delta(const TaylorContext& ctx, const SimplexWeights& lambda);
DiscrepancyReport discrepancy_delta(const TaylorContext& ctx, const ResponseTable& responses,
                                    const SimplexWeights& lambda);

struct HorizonPoint {
  double horizon = 0.0;
  double learning_rate = 0.0;
  long long steps = 0;
  double error = 0.0;     // |theta_mix - theta_merge|
  double delta_norm = 0.0;
  double residual = 0.0;  // |(theta_mix - theta_merge) - delta|
};

struct ScalingReport {
  SimplexWeights lambda;
  std::vector<HorizonPoint> points;  // horizon, horizon/2
  std::optional<double> error_ratio;     // absent when the smaller error is zero
  std::optional<double> residual_ratio;
};

/// Simulates mixed training and expert merging at horizons h and h/2 with a
/// fixed step count (eta = h / steps) on a quadratic world.
ScalingReport validate_order(const World& world, const ModelSpec& model,
                             const ParameterVector& base, const SimplexWeights& lambda,
                             double horizon, long long steps);

struct CurvatureMatrix {
  Eigen::MatrixXd gamma;
  std::vector<bool> diagonally_dominant;  // gamma_kk >= sum_{j != k} gamma_kj
};

/// gamma_kj = (|H_k g_j| / |g_j|) / (|H_k g_k| / |g_k|); probes use unit
/// directions. gamma_kk is 1 by definition.
CurvatureMatrix gamma_matrix(const TaylorContext& ctx);

/// Pairwise cosine of task vectors theta_k - base; symmetric, unit diagonal.
Eigen::MatrixXd task_vector_cosine(const std::vector<ParameterVector>& experts,
                                   const ParameterVector& base);
Eigen::MatrixXd task_vector_cosine(const std::vector<ExpertArtifact>& experts,
                                   const ParameterVector& base);

}  // namespace mergemix
