#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mergemix/param_core.hpp"

namespace mergemix {

// ---------------------------------------------------------------------------
// Domains and data
// ---------------------------------------------------------------------------

/// Analytic domain: L(theta) = 1/2 (theta - minimizer)^T curvature (theta - minimizer).
struct QuadraticGenerator {
  ParameterVector minimizer;
  Eigen::MatrixXd curvature;
};

/// Linear teacher y = W x + noise, x ~ N(0, I).
struct RegressionGenerator {
  Eigen::MatrixXd target_weights;  // output_dim x input_dim
  double noise = 0.0;
};

struct DomainSpec {
  std::string name;
  std::variant<QuadraticGenerator, RegressionGenerator> generator;
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
  std::uint64_t seed = 0;

  bool is_quadratic() const noexcept {
    return std::holds_alternative<QuadraticGenerator>(generator);
  }
  const QuadraticGenerator& quadratic() const;
  const RegressionGenerator& regression() const;

  /// Throws InvalidArgument / NumericError on a malformed spec (non-SPD
  /// curvature, negative noise, zero sizes for regression tasks).
  void validate() const;
};

enum class Split { train, heldout };

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  Split split = Split::train;

  std::size_t size() const noexcept { return inputs.size(); }
  bool empty() const noexcept { return inputs.empty(); }
  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Model families
// ---------------------------------------------------------------------------

enum class Activation { tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct QuadraticModel {
  std::size_t dimension = 0;
};

/// input -> hidden (activation) -> output (linear). Parameter layout:
/// W1 (hidden x input, row-major), b1, W2 (output x hidden, row-major), b2.
struct ToyNetModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::tanh;

  std::size_t param_count() const noexcept {
    return hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
  }
};

inline constexpr std::size_t kMaxToyNetParams = 10000;

class ModelSpec {
 public:
  static ModelSpec quadratic_world(std::size_t dimension);
  static ModelSpec toy_net(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                           Activation activation = Activation::tanh);

  bool is_quadratic() const noexcept { return std::holds_alternative<QuadraticModel>(kind_); }
  const ToyNetModel& net() const;
  std::size_t param_count() const noexcept;

  /// Checks that a domain can be evaluated under this model.
  void check_domain(const DomainSpec& domain) const;
  void check_params(const ParameterVector& theta, const char* context) const;

  bool operator==(const ModelSpec&) const;

 private:
  std::variant<QuadraticModel, ToyNetModel> kind_;
};

/// Seeded small-scale initialisation for a toy net (uniform in +-scale/sqrt(fan_in)).
ParameterVector init_toy_net(const ToyNetModel& net, std::uint64_t seed, double scale = 1.0);

/// Forward pass of a toy net for one input.
std::vector<double> toy_net_forward(const ToyNetModel& net, const ParameterVector& theta,
                                    std::span<const double> input);

// ---------------------------------------------------------------------------
// Differential queries
// ---------------------------------------------------------------------------

double loss(const ModelSpec& model, const DomainSpec& domain, const Dataset& data,
            const ParameterVector& theta);

ParameterVector grad(const ModelSpec& model, const DomainSpec& domain, const Dataset& data,
                     const ParameterVector& theta);

/// Mean gradient over a subset of examples (toy-net mini-batches). Quadratic
/// domains ignore the batch.
ParameterVector grad_batch(const ModelSpec& model, const DomainSpec& domain, const Dataset& data,
                           const ParameterVector& theta, std::span<const std::size_t> batch);

/// Default finite-difference step 1e-4 * (1 + |theta|_inf).
double default_fd_step(const ParameterVector& theta);

struct DifferentialQuery {
  const ModelSpec& model;
  const DomainSpec& domain;
  const Dataset& data;
  ParameterVector point;
  std::optional<ParameterVector> direction;
  std::optional<double> step;
};

/// Hessian-vector product. Exact A v for quadratic domains; central difference
/// of gradients (grad(theta + eps v) - grad(theta - eps v)) / 2 eps for toy nets.
ParameterVector hvp(const DifferentialQuery& query);

}  // namespace mergemix
