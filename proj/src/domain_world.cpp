#include "mergemix/domain_world.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mergemix/metrics_stats.hpp"

namespace mergemix {

namespace {

Dataset draw_regression(const RegressionGenerator& g, std::size_t count, Split split,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto out_dim = static_cast<std::size_t>(g.target_weights.rows());
  const auto in_dim = static_cast<std::size_t>(g.target_weights.cols());
  Dataset d;
  d.split = split;
  d.inputs.reserve(count);
  d.targets.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> x(in_dim);
    for (auto& xi : x) xi = normal(rng);
    std::vector<double> y(out_dim);
    for (std::size_t o = 0; o < out_dim; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < in_dim; ++i) s += g.target_weights(o, i) * x[i];
      y[o] = s;
    }
    if (g.noise > 0.0) {
      for (auto& yo : y) yo += g.noise * normal(rng);
    }
    d.inputs.push_back(std::move(x));
    d.targets.push_back(std::move(y));
  }
  return d;
}

void check_unique(const std::vector<DomainSpec>& specs, const char* what) {
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(s.name).second)
      throw InvalidArgument(std::string("duplicate ") + what + " name '" + s.name + "'");
  }
}

Eigen::MatrixXd diag(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v.asDiagonal();
}

DomainSpec quadratic_domain(std::string name, ParameterVector mu, Eigen::MatrixXd a) {
  DomainSpec d;
  d.name = std::move(name);
  d.generator = QuadraticGenerator{std::move(mu), std::move(a)};
  return d;
}

}  // namespace

std::vector<DomainData> generate_world(const std::vector<DomainSpec>& specs) {
  check_unique(specs, "domain");
  std::vector<DomainData> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    spec.validate();
    DomainData data;
    data.train.split = Split::train;
    data.heldout.split = Split::heldout;
    if (!spec.is_quadratic()) {
      std::mt19937_64 rng(spec.seed);
      data.train = draw_regression(spec.regression(), spec.train_size, Split::train, rng);
      data.heldout = draw_regression(spec.regression(), spec.heldout_size, Split::heldout, rng);
    }
    out.push_back(std::move(data));
  }
  return out;
}

World::World(std::vector<DomainSpec> domains, std::vector<DomainSpec> capabilities)
    : domains_(std::move(domains)), capabilities_(std::move(capabilities)) {
  if (domains_.empty()) throw InvalidArgument("world needs at least one domain");
  if (capabilities_.empty()) capabilities_ = domains_;
  domain_data_ = generate_world(domains_);
  check_unique(capabilities_, "capability");
  capability_data_ = generate_world(capabilities_);
}

std::size_t World::domain_index(const std::string& name) const {
  for (std::size_t i = 0; i < domains_.size(); ++i)
    if (domains_[i].name == name) return i;
  throw InvalidArgument("unknown domain '" + name + "'");
}

std::size_t World::capability_index(const std::string& name) const {
  for (std::size_t i = 0; i < capabilities_.size(); ++i)
    if (capabilities_[i].name == name) return i;
  throw InvalidArgument("unknown capability '" + name + "'");
}

void World::check_model(const ModelSpec& model) const {
  for (const auto& d : domains_) model.check_domain(d);
  for (const auto& c : capabilities_) model.check_domain(c);
}

std::vector<double> World::raw_scores(const ModelSpec& model, const ParameterVector& theta) const {
  std::vector<double> raw(capabilities_.size());
  for (std::size_t m = 0; m < capabilities_.size(); ++m) {
    const auto& cap = capabilities_[m];
    if (!cap.is_quadratic() && capability_data_[m].heldout.empty())
      throw InvalidArgument("capability '" + cap.name + "' has no held-out split");
    raw[m] = -loss(model, cap, capability_data_[m].heldout, theta);
  }
  return raw;
}

NormalizationContext NormalizationContext::from_population(
    const std::vector<std::vector<double>>& raw_rows) {
  if (raw_rows.empty()) throw InvalidArgument("normalization needs a nonempty population");
  NormalizationContext ctx;
  ctx.min = raw_rows.front();
  ctx.max = raw_rows.front();
  for (const auto& row : raw_rows) {
    if (row.size() != ctx.min.size()) throw DimensionError("ragged score population");
    for (std::size_t m = 0; m < row.size(); ++m) {
      ctx.min[m] = std::min(ctx.min[m], row[m]);
      ctx.max[m] = std::max(ctx.max[m], row[m]);
    }
  }
  return ctx;
}

std::vector<double> NormalizationContext::normalize(const std::vector<double>& raw) const {
  if (raw.size() != min.size()) throw DimensionError("normalize: capability count mismatch");
  std::vector<double> out(raw.size());
  for (std::size_t m = 0; m < raw.size(); ++m)
    out[m] = normalize_scores(std::vector<double>{raw[m]}, {min[m], max[m]}).front();
  return out;
}

CapabilityScore evaluate_capability(const ParameterVector& theta, const ModelSpec& model,
                                    const DomainSpec& domain, const Dataset& heldout,
                                    double range_min, double range_max) {
  if (!domain.is_quadratic() && heldout.empty())
    throw InvalidArgument("capability '" + domain.name + "' has no held-out split");
  CapabilityScore s;
  s.domain = domain.name;
  s.raw = -loss(model, domain, heldout, theta);
  s.normalized = normalize_scores({s.raw}, {range_min, range_max}).front();
  return s;
}

Eigen::MatrixXd random_spd(std::size_t dim, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(lo, hi);
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eig(n);
  for (Eigen::Index i = 0; i < n; ++i) eig(i) = uniform(rng);
  Eigen::MatrixXd a = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

Fixture fixture_qw2() {
  std::vector<DomainSpec> d;
  d.push_back(quadratic_domain("d1", ParameterVector{1.0, 0.0}, diag({1.0, 1.0})));
  d.push_back(quadratic_domain("d2", ParameterVector{0.0, 1.0}, diag({2.0, 1.0})));
  return {"QW-2", ModelSpec::quadratic_world(2), ParameterVector(2), World(std::move(d))};
}

Fixture fixture_qw4(std::uint64_t seed) {
  constexpr std::size_t kDim = 8;
  // Each minimizer blends a direction shared by all domains with its own.
  constexpr double kShared = 0.7;
  const char* names[] = {"math", "code", "sft", "web"};
  const double scales[] = {1.0, 1.4, 0.8, 1.2};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto unit_draw = [&] {
    std::vector<double> v(kDim);
    for (auto& x : v) x = normal(rng);
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
  };
  const auto common = unit_draw();
  std::vector<DomainSpec> d;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto own = unit_draw();
    std::vector<double> mu(kDim);
    double n = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) {
      mu[i] = kShared * common[i] + std::sqrt(1.0 - kShared * kShared) * own[i];
      n += mu[i] * mu[i];
    }
    n = std::sqrt(n);
    for (auto& x : mu) x *= scales[k] / n;
    d.push_back(quadratic_domain(names[k], ParameterVector(std::move(mu)),
                                 random_spd(kDim, 0.5, 2.0, seed + 101 * (k + 1))));
  }
  return {"QW-4", ModelSpec::quadratic_world(kDim), ParameterVector(kDim), World(std::move(d))};
}

Fixture fixture_qw_separable() {
  constexpr std::size_t kDim = 8;
  constexpr double kSmall = 1e-6;
  auto unit = [](std::size_t i, double s) {
    ParameterVector v(kDim);
    v[i] = s;
    return v;
  };
  // Leaves in block A (coords 0-3) learn at unit curvature; block B (4-7) at 2.
  const Eigen::MatrixXd leaf_a = diag({1, 1, 1, 1, 1, 1, 1, 1});
  const Eigen::MatrixXd leaf_b = diag({1, 1, 1, 1, 2, 2, 2, 2});
  std::vector<DomainSpec> leaves;
  leaves.push_back(quadratic_domain("a1", unit(0, 1.0), leaf_a));
  leaves.push_back(quadratic_domain("a2", unit(1, 1.0), leaf_a));
  leaves.push_back(quadratic_domain("b1", unit(4, 1.0), leaf_b));
  leaves.push_back(quadratic_domain("b2", unit(5, 1.0), leaf_b));

  std::vector<DomainSpec> caps;
  ParameterVector mu_a(kDim), mu_b(kDim);
  // Both cluster optima sit at the all-0.25 leaf mixture once experts converge.
  mu_a[0] = mu_a[1] = 0.25;
  mu_b[4] = mu_b[5] = 0.25;
  caps.push_back(quadratic_domain(
      "cluster-a", mu_a, diag({1, 1, 1, 1, kSmall, kSmall, kSmall, kSmall})));
  caps.push_back(quadratic_domain(
      "cluster-b", mu_b, diag({kSmall, kSmall, kSmall, kSmall, 1, 1, 1, 1})));
  return {"QW-SEP", ModelSpec::quadratic_world(kDim), ParameterVector(kDim),
          World(std::move(leaves), std::move(caps))};
}

Fixture fixture_toy_net(std::size_t domains, double noise, std::uint64_t seed) {
  if (domains == 0) throw InvalidArgument("toy-net fixture needs at least one domain");
  constexpr std::size_t kOut = 2;
  constexpr std::size_t kHidden = 6;
  const std::size_t in = kOut * domains;
  std::vector<DomainSpec> d;
  for (std::size_t k = 0; k < domains; ++k) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kOut, static_cast<Eigen::Index>(in));
    // rows of different domains live on disjoint input coordinates
    for (std::size_t o = 0; o < kOut; ++o) w(o, static_cast<Eigen::Index>(kOut * k + o)) = 1.0;
    DomainSpec spec;
    spec.name = "task" + std::to_string(k + 1);
    spec.generator = RegressionGenerator{w, noise};
    spec.train_size = 256;
    spec.heldout_size = 128;
    spec.seed = seed * 1000 + k;
    d.push_back(std::move(spec));
  }
  auto model = ModelSpec::toy_net(in, kHidden, kOut);
  auto base = init_toy_net(model.net(), seed, 0.5);
  return {"TOY-NET", model, base, World(std::move(d))};
}

Fixture fixture_by_name(const std::string& name) {
  if (name == "QW-2") return fixture_qw2();
  if (name == "QW-4") return fixture_qw4();
  if (name == "QW-SEP") return fixture_qw_separable();
  if (name == "TOY-NET") return fixture_toy_net();
  throw InvalidArgument("unknown fixture '" + name + "'");
}

}  // namespace mergemix
