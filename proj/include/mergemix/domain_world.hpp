#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mergemix/model.hpp"
#include "mergemix/param_core.hpp"

namespace mergemix {

struct DomainData {
  Dataset train;
  Dataset heldout;
  bool operator==(const DomainData&) const = default;
};

/// Deterministic datasets for each spec, in order. Quadratic domains yield
/// empty datasets since their loss is analytic.
std::vector<DomainData> generate_world(const std::vector<DomainSpec>& specs);

/// Training domains (one expert each) plus the capability domains that
/// merged candidates are scored on. When no capability domains are given the
/// training domains double as capabilities.
class World {
 public:
  World() = default;
  World(std::vector<DomainSpec> domains, std::vector<DomainSpec> capabilities = {});

  const std::vector<DomainSpec>& domains() const noexcept { return domains_; }
  const std::vector<DomainSpec>& capabilities() const noexcept { return capabilities_; }
  std::size_t domain_count() const noexcept { return domains_.size(); }
  std::size_t capability_count() const noexcept { return capabilities_.size(); }

  const Dataset& train_data(std::size_t domain) const { return domain_data_.at(domain).train; }
  const Dataset& heldout_data(std::size_t capability) const {
    return capability_data_.at(capability).heldout;
  }
  std::size_t domain_index(const std::string& name) const;
  std::size_t capability_index(const std::string& name) const;

  /// Raw capability (negative held-out loss) for every capability domain.
  std::vector<double> raw_scores(const ModelSpec& model, const ParameterVector& theta) const;

  void check_model(const ModelSpec& model) const;

 private:
  std::vector<DomainSpec> domains_;
  std::vector<DomainSpec> capabilities_;
  std::vector<DomainData> domain_data_;
  std::vector<DomainData> capability_data_;
};

/// Per-capability min/max over a reference population of raw scores.
struct NormalizationContext {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const noexcept { return min.size(); }
  static NormalizationContext from_population(const std::vector<std::vector<double>>& raw_rows);
  std::vector<double> normalize(const std::vector<double>& raw) const;
  bool operator==(const NormalizationContext&) const = default;
};

struct CapabilityScore {
  std::string domain;
  double raw = 0.0;
  double normalized = 0.5;
};

/// raw = -loss(theta, heldout), normalized by `range` (min, max).
CapabilityScore evaluate_capability(const ParameterVector& theta, const ModelSpec& model,
                                    const DomainSpec& domain, const Dataset& heldout,
                                    double range_min, double range_max);

// ---------------------------------------------------------------------------
// Standard fixtures
// ---------------------------------------------------------------------------

struct Fixture {
  std::string name;
  ModelSpec model;
  ParameterVector base;
  World world;
};

/// P=2, base (0,0); d1: mu=(1,0), A=I; d2: mu=(0,1), A=diag(2,1).
Fixture fixture_qw2();

/// P=8, four quadratic domains (math, code, sft, web). Minimizers share a
/// common direction; curvatures are randomly rotated SPD matrices. All
/// randomness comes from `seed`.
Fixture fixture_qw4(std::uint64_t seed = 1);

/// Two coarse clusters over block-diagonal coordinates; every leaf expert and
/// cluster capability touches only its own block. Capabilities are the
/// clusters, leaves are the training domains.
Fixture fixture_qw_separable();

/// Toy-net world: regression teachers with mutually orthogonal rows.
Fixture fixture_toy_net(std::size_t domains = 2, double noise = 0.0, std::uint64_t seed = 7);

/// Looks up a fixture by name ("QW-2", "QW-4", "QW-SEP", "TOY-NET").
Fixture fixture_by_name(const std::string& name);

/// Rotation-randomised SPD matrix with eigenvalues uniform in [lo, hi].
Eigen::MatrixXd random_spd(std::size_t dim, double lo, double hi, std::uint64_t seed);

}  // namespace mergemix
