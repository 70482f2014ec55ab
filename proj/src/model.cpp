#include "mergemix/model.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace mergemix {

namespace {

Eigen::Map<const Eigen::VectorXd> as_eigen(const ParameterVector& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : z; }

// derivative expressed through the activated value
double activate_deriv(Activation a, double h) { return a == Activation::tanh ? 1.0 - h * h : 1.0; }

struct NetView {
  const ToyNetModel& net;
  const double* w1;
  const double* b1;
  const double* w2;
  const double* b2;

  NetView(const ToyNetModel& n, const double* p)
      : net(n),
        w1(p),
        b1(p + n.hidden_dim * n.input_dim),
        w2(b1 + n.hidden_dim),
        b2(w2 + n.output_dim * n.hidden_dim) {}
};

void check_dataset(const ToyNetModel& net, const Dataset& data) {
  if (data.empty()) throw InvalidArgument("toy-net loss requires a nonempty dataset");
  if (data.inputs.size() != data.targets.size())
    throw DimensionError("dataset inputs and targets differ in length");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.inputs[i].size() != net.input_dim || data.targets[i].size() != net.output_dim)
      throw DimensionError("dataset example does not match toy-net dimensions");
  }
}

// Accumulates loss and (optionally) gradient for one example.
double example_loss_grad(const NetView& v, std::span<const double> x, std::span<const double> y,
                         double* grad_out, std::vector<double>& hidden,
                         std::vector<double>& delta_hidden) {
  const auto& n = v.net;
  for (std::size_t h = 0; h < n.hidden_dim; ++h) {
    double z = v.b1[h];
    const double* row = v.w1 + h * n.input_dim;
    for (std::size_t i = 0; i < n.input_dim; ++i) z += row[i] * x[i];
    hidden[h] = activate(n.activation, z);
  }
  double l = 0.0;
  std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
  double* g_w1 = grad_out;
  double* g_b1 = grad_out ? g_w1 + n.hidden_dim * n.input_dim : nullptr;
  double* g_w2 = grad_out ? g_b1 + n.hidden_dim : nullptr;
  double* g_b2 = grad_out ? g_w2 + n.output_dim * n.hidden_dim : nullptr;
  for (std::size_t o = 0; o < n.output_dim; ++o) {
    double out = v.b2[o];
    const double* row = v.w2 + o * n.hidden_dim;
    for (std::size_t h = 0; h < n.hidden_dim; ++h) out += row[h] * hidden[h];
    const double r = out - y[o];
    l += 0.5 * r * r;
    if (grad_out) {
      g_b2[o] += r;
      double* grow = g_w2 + o * n.hidden_dim;
      for (std::size_t h = 0; h < n.hidden_dim; ++h) {
        grow[h] += r * hidden[h];
        delta_hidden[h] += r * row[h];
      }
    }
  }
  if (grad_out) {
    for (std::size_t h = 0; h < n.hidden_dim; ++h) {
      const double d = delta_hidden[h] * activate_deriv(n.activation, hidden[h]);
      g_b1[h] += d;
      double* grow = g_w1 + h * n.input_dim;
      for (std::size_t i = 0; i < n.input_dim; ++i) grow[i] += d * x[i];
    }
  }
  return l;
}

template <typename IndexFn>
double net_loss_grad(const ToyNetModel& net, const Dataset& data, const ParameterVector& theta,
                     std::size_t count, IndexFn index, ParameterVector* grad_out) {
  NetView view(net, theta.data());
  std::vector<double> hidden(net.hidden_dim), delta(net.hidden_dim);
  double total = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t i = index(b);
    total += example_loss_grad(view, data.inputs[i], data.targets[i],
                               grad_out ? grad_out->data() : nullptr, hidden, delta);
  }
  const double inv = 1.0 / static_cast<double>(count);
  if (grad_out) {
    for (auto& g : grad_out->span()) g *= inv;
  }
  return total * inv;
}

}  // namespace

const QuadraticGenerator& DomainSpec::quadratic() const {
  if (auto* q = std::get_if<QuadraticGenerator>(&generator)) return *q;
  throw InvalidArgument("domain '" + name + "' is not a quadratic domain");
}

const RegressionGenerator& DomainSpec::regression() const {
  if (auto* r = std::get_if<RegressionGenerator>(&generator)) return *r;
  throw InvalidArgument("domain '" + name + "' is not a regression-task domain");
}

void DomainSpec::validate() const {
  if (name.empty()) throw InvalidArgument("domain name must be nonempty");
  if (const auto* q = std::get_if<QuadraticGenerator>(&generator)) {
    const auto p = static_cast<Eigen::Index>(q->minimizer.size());
    if (p == 0) throw DimensionError("domain '" + name + "': empty minimizer");
    if (q->curvature.rows() != p || q->curvature.cols() != p)
      throw DimensionError("domain '" + name + "': curvature must be P x P");
    if (!q->curvature.allFinite()) throw NumericError("domain '" + name + "': non-finite curvature");
    const double scale = std::max(1.0, q->curvature.cwiseAbs().maxCoeff());
    if ((q->curvature - q->curvature.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw InvalidArgument("domain '" + name + "': curvature is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(q->curvature);
    if (llt.info() != Eigen::Success)
      throw InvalidArgument("domain '" + name + "': curvature is not positive definite");
  } else {
    const auto& r = std::get<RegressionGenerator>(generator);
    if (r.target_weights.size() == 0)
      throw DimensionError("domain '" + name + "': empty target weights");
    if (!r.target_weights.allFinite())
      throw NumericError("domain '" + name + "': non-finite target weights");
    if (!(r.noise >= 0.0) || !std::isfinite(r.noise))
      throw InvalidArgument("domain '" + name + "': noise must be >= 0");
    if (train_size < 1 || heldout_size < 1)
      throw InvalidArgument("domain '" + name + "': train/heldout sizes must be >= 1");
  }
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw InvalidArgument("unknown activation '" + name + "'");
}

ModelSpec ModelSpec::quadratic_world(std::size_t dimension) {
  if (dimension == 0) throw DimensionError("quadratic-world dimension must be >= 1");
  ModelSpec m;
  m.kind_ = QuadraticModel{dimension};
  return m;
}

ModelSpec ModelSpec::toy_net(std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t output_dim, Activation activation) {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0)
    throw DimensionError("toy-net layer sizes must be >= 1");
  ToyNetModel net{input_dim, hidden_dim, output_dim, activation};
  if (net.param_count() > kMaxToyNetParams)
    throw DimensionError("toy-net exceeds " + std::to_string(kMaxToyNetParams) + " parameters");
  ModelSpec m;
  m.kind_ = net;
  return m;
}

const ToyNetModel& ModelSpec::net() const {
  if (auto* n = std::get_if<ToyNetModel>(&kind_)) return *n;
  throw InvalidArgument("model is not a toy-net");
}

std::size_t ModelSpec::param_count() const noexcept {
  if (auto* q = std::get_if<QuadraticModel>(&kind_)) return q->dimension;
  return std::get<ToyNetModel>(kind_).param_count();
}

void ModelSpec::check_domain(const DomainSpec& domain) const {
  domain.validate();
  if (is_quadratic()) {
    if (!domain.is_quadratic())
      throw InvalidArgument("quadratic-world model needs quadratic domains ('" + domain.name + "')");
    if (domain.quadratic().minimizer.size() != param_count())
      throw DimensionError("domain '" + domain.name + "' dimension does not match model");
  } else {
    if (domain.is_quadratic())
      throw InvalidArgument("toy-net model needs regression-task domains ('" + domain.name + "')");
    const auto& w = domain.regression().target_weights;
    const auto& n = net();
    if (static_cast<std::size_t>(w.rows()) != n.output_dim ||
        static_cast<std::size_t>(w.cols()) != n.input_dim)
      throw DimensionError("domain '" + domain.name + "' teacher shape does not match toy-net");
  }
}

void ModelSpec::check_params(const ParameterVector& theta, const char* context) const {
  if (theta.size() != param_count()) {
    throw DimensionError(std::string(context) + ": expected " + std::to_string(param_count()) +
                         " parameters, got " + std::to_string(theta.size()));
  }
}

bool ModelSpec::operator==(const ModelSpec& other) const {
  if (is_quadratic() != other.is_quadratic()) return false;
  if (is_quadratic()) return param_count() == other.param_count();
  const auto& a = net();
  const auto& b = other.net();
  return a.input_dim == b.input_dim && a.hidden_dim == b.hidden_dim &&
         a.output_dim == b.output_dim && a.activation == b.activation;
}

ParameterVector init_toy_net(const ToyNetModel& net, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  ParameterVector theta(net.param_count());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double s1 = scale / std::sqrt(static_cast<double>(net.input_dim));
  const double s2 = scale / std::sqrt(static_cast<double>(net.hidden_dim));
  std::size_t k = 0;
  for (std::size_t i = 0; i < net.hidden_dim * net.input_dim; ++i) theta[k++] = s1 * u(rng);
  k += net.hidden_dim;  // biases start at zero
  for (std::size_t i = 0; i < net.output_dim * net.hidden_dim; ++i) theta[k++] = s2 * u(rng);
  return theta;
}

std::vector<double> toy_net_forward(const ToyNetModel& net, const ParameterVector& theta,
                                    std::span<const double> input) {
  if (theta.size() != net.param_count() || input.size() != net.input_dim)
    throw DimensionError("toy_net_forward: dimension mismatch");
  NetView v(net, theta.data());
  std::vector<double> hidden(net.hidden_dim);
  for (std::size_t h = 0; h < net.hidden_dim; ++h) {
    double z = v.b1[h];
    for (std::size_t i = 0; i < net.input_dim; ++i) z += v.w1[h * net.input_dim + i] * input[i];
    hidden[h] = activate(net.activation, z);
  }
  std::vector<double> out(net.output_dim);
  for (std::size_t o = 0; o < net.output_dim; ++o) {
    double z = v.b2[o];
    for (std::size_t h = 0; h < net.hidden_dim; ++h) z += v.w2[o * net.hidden_dim + h] * hidden[h];
    out[o] = z;
  }
  return out;
}

double loss(const ModelSpec& model, const DomainSpec& domain, const Dataset& data,
            const ParameterVector& theta) {
  model.check_params(theta, "loss");
  if (model.is_quadratic()) {
    const auto& q = domain.quadratic();
    require_same_size(theta, q.minimizer, "loss");
    const Eigen::VectorXd d = as_eigen(theta) - as_eigen(q.minimizer);
    const double l = 0.5 * d.dot(q.curvature * d);
    if (!std::isfinite(l)) throw NumericError("loss: non-finite value");
    return std::max(0.0, l);
  }
  const auto& net = model.net();
  check_dataset(net, data);
  const double l =
      net_loss_grad(net, data, theta, data.size(), [](std::size_t i) { return i; }, nullptr);
  if (!std::isfinite(l)) throw NumericError("loss: non-finite value");
  return l;
}

ParameterVector grad(const ModelSpec& model, const DomainSpec& domain, const Dataset& data,
                     const ParameterVector& theta) {
  model.check_params(theta, "grad");
  if (model.is_quadratic()) {
    const auto& q = domain.quadratic();
    require_same_size(theta, q.minimizer, "grad");
    const Eigen::VectorXd g = q.curvature * (as_eigen(theta) - as_eigen(q.minimizer));
    ParameterVector out(std::vector<double>(g.data(), g.data() + g.size()));
    return out;
  }
  const auto& net = model.net();
  check_dataset(net, data);
  ParameterVector out(theta.size());
  net_loss_grad(net, data, theta, data.size(), [](std::size_t i) { return i; }, &out);
  require_finite(out, "grad");
  return out;
}

ParameterVector grad_batch(const ModelSpec& model, const DomainSpec& domain, const Dataset& data,
                           const ParameterVector& theta, std::span<const std::size_t> batch) {
  if (model.is_quadratic() || batch.empty()) return grad(model, domain, data, theta);
  model.check_params(theta, "grad_batch");
  const auto& net = model.net();
  check_dataset(net, data);
  ParameterVector out(theta.size());
  net_loss_grad(net, data, theta, batch.size(), [&](std::size_t b) { return batch[b]; }, &out);
  require_finite(out, "grad_batch");
  return out;
}

double default_fd_step(const ParameterVector& theta) { return 1e-4 * (1.0 + norm_inf(theta)); }

ParameterVector hvp(const DifferentialQuery& query) {
  if (!query.direction) throw InvalidArgument("hvp requires a direction");
  if (query.step && !(*query.step > 0.0))
    throw InvalidArgument("hvp finite-difference step must be > 0");
  const auto& v = *query.direction;
  query.model.check_params(query.point, "hvp");
  require_same_size(query.point, v, "hvp direction");
  if (query.model.is_quadratic()) {
    const auto& q = query.domain.quadratic();
    const Eigen::VectorXd hv = q.curvature * as_eigen(v);
    return ParameterVector(std::vector<double>(hv.data(), hv.data() + hv.size()));
  }
  const double eps = query.step.value_or(default_fd_step(query.point));
  const auto plus = grad(query.model, query.domain, query.data,
                         linear_combine(query.point, {{eps, v}}));
  const auto minus = grad(query.model, query.domain, query.data,
                          linear_combine(query.point, {{-eps, v}}));
  ParameterVector out(v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (plus[i] - minus[i]) / (2.0 * eps);
  require_finite(out, "hvp");
  return out;
}

}  // namespace mergemix
