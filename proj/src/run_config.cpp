#include "mergemix/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mergemix/io.hpp"

namespace mergemix {

using json = nlohmann::json;

std::string to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::flat: return "flat";
    case PipelineMode::hierarchical_top_down: return "hierarchical-top-down";
    case PipelineMode::hierarchical_bottom_up: return "hierarchical-bottom-up";
    case PipelineMode::dynamic_recalibrate: return "dynamic-recalibrate";
  }
  return "flat";
}

PipelineMode pipeline_mode_from_string(const std::string& s) {
  if (s == "flat") return PipelineMode::flat;
  if (s == "hierarchical-top-down") return PipelineMode::hierarchical_top_down;
  if (s == "hierarchical-bottom-up") return PipelineMode::hierarchical_bottom_up;
  if (s == "dynamic-recalibrate") return PipelineMode::dynamic_recalibrate;
  throw ConfigError("unknown mode '" + s + "'");
}

namespace {

// One JSON object with a closed key set. Every accessor names the full key
// path in its error.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
      if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& require(const char* key) const {
    if (!has(key)) throw ConfigError("missing required field '" + name(key) + "'");
    return j_.at(key);
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  std::string string(const char* key) const {
    const auto& v = require(key);
    if (!v.is_string()) throw ConfigError("'" + name(key) + "' must be a string");
    return v.get<std::string>();
  }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ConfigError("'" + name(key) + "' must be a finite number");
    return v.get<double>();
  }

  std::uint64_t count(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return as_count(j_.at(key), name(key));
  }

  static std::uint64_t as_count(const json& v, const std::string& what) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError("'" + what + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
};

std::vector<double> number_array(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError("'" + what + "' must be a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("'" + what + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Eigen::MatrixXd number_matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError("'" + what + "' must be a nonempty array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& r : v) rows.push_back(number_array(r, what));
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ConfigError("'" + what + "' rows differ in length");
    for (std::size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
  }
  return m;
}

SimplexWeights simplex(const json& v, std::size_t k, const std::string& what) {
  const auto values = number_array(v, what);
  if (values.size() != k)
    throw ConfigError("'" + what + "' has " + std::to_string(values.size()) + " entries, expected " +
                      std::to_string(k));
  try {
    return SimplexWeights(values);
  } catch (const Error& e) {
    throw ConfigError("'" + what + "': " + e.what());
  }
}

std::vector<SimplexWeights> simplex_list(const json& v, std::size_t k, const std::string& what) {
  if (!v.is_array()) throw ConfigError("'" + what + "' must be an array");
  std::vector<SimplexWeights> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(simplex(v[i], k, what + "[" + std::to_string(i) + "]"));
  return out;
}

DomainSpec parse_domain(const json& j, const std::string& path) {
  Section s(j, path,
            {"name", "minimizer", "curvature", "target_weights", "noise", "train_size",
             "heldout_size", "seed"});
  DomainSpec d;
  d.name = s.string("name");
  if (s.has("minimizer")) {
    if (s.has("target_weights")) throw ConfigError(path + " mixes quadratic and regression fields");
    const auto mu = number_array(j.at("minimizer"), s.name("minimizer"));
    const auto a = number_matrix(s.require("curvature"), s.name("curvature"));
    d.generator = QuadraticGenerator{ParameterVector(mu), a};
  } else if (s.has("target_weights")) {
    RegressionGenerator g;
    g.target_weights = number_matrix(j.at("target_weights"), s.name("target_weights"));
    g.noise = s.number("noise", 0.0);
    d.generator = g;
    d.train_size = s.count("train_size", 256);
    d.heldout_size = s.count("heldout_size", 256);
    d.seed = s.count("seed", 0);
  } else {
    throw ConfigError(path + " needs either 'minimizer' or 'target_weights'");
  }
  d.validate();
  return d;
}

ModelSpec parse_model(const json& j) {
  Section s(j, "world.model", {"kind", "dimension", "input_dim", "hidden_dim", "output_dim", "activation"});
  const auto kind = s.string("kind");
  if (kind == "quadratic-world") return ModelSpec::quadratic_world(s.count("dimension", 0));
  if (kind == "toy-net")
    return ModelSpec::toy_net(s.count("input_dim", 0), s.count("hidden_dim", 0), s.count("output_dim", 0),
                              activation_from_string(s.has("activation") ? s.string("activation") : "tanh"));
  throw ConfigError("unknown model kind '" + kind + "'");
}

void parse_world(const json& j, RunConfig& rc) {
  Section s(j, "world",
            {"fixture", "fixture_seed", "fixture_domains", "fixture_noise", "model", "domains",
             "capabilities", "base", "base_seed"});
  if (s.has("fixture")) {
    for (const char* k : {"model", "domains", "capabilities", "base", "base_seed"})
      if (s.has(k)) throw ConfigError("'world." + std::string(k) + "' cannot be combined with a fixture");
    const auto name = s.string("fixture");
    if (name == "QW-4") {
      rc.world = fixture_qw4(s.count("fixture_seed", 1));
    } else if (name == "TOY-NET") {
      rc.world = fixture_toy_net(s.count("fixture_domains", 2), s.number("fixture_noise", 0.0),
                                 s.count("fixture_seed", 7));
    } else if (name == "QW-2" || name == "QW-SEP") {
      for (const char* k : {"fixture_seed", "fixture_domains", "fixture_noise"})
        if (s.has(k)) throw ConfigError("'world." + std::string(k) + "' does not apply to " + name);
      rc.world = fixture_by_name(name);
    } else {
      throw ConfigError("unknown fixture '" + name + "'");
    }
    rc.world_label = name;
    return;
  }

  for (const char* k : {"fixture_seed", "fixture_domains", "fixture_noise"})
    if (s.has(k)) throw ConfigError("'world." + std::string(k) + "' requires 'world.fixture'");
  const ModelSpec model = parse_model(s.require("model"));
  const auto& dj = s.require("domains");
  if (!dj.is_array() || dj.empty()) throw ConfigError("'world.domains' must be a nonempty array");
  std::vector<DomainSpec> domains, caps;
  for (std::size_t i = 0; i < dj.size(); ++i)
    domains.push_back(parse_domain(dj[i], "world.domains[" + std::to_string(i) + "]"));
  if (s.has("capabilities")) {
    const auto& cj = j.at("capabilities");
    if (!cj.is_array()) throw ConfigError("'world.capabilities' must be an array");
    for (std::size_t i = 0; i < cj.size(); ++i)
      caps.push_back(parse_domain(cj[i], "world.capabilities[" + std::to_string(i) + "]"));
  }
  ParameterVector base;
  if (s.has("base")) {
    if (s.has("base_seed")) throw ConfigError("'world.base' and 'world.base_seed' are exclusive");
    base = ParameterVector(number_array(j.at("base"), "world.base"));
  } else if (model.is_quadratic()) {
    base = ParameterVector(model.param_count());
  } else {
    base = init_toy_net(model.net(), s.count("base_seed", 0));
  }
  model.check_params(base, "world.base");
  rc.world = Fixture{"inline", model, std::move(base), World(std::move(domains), std::move(caps))};
  rc.world.world.check_model(model);
  rc.world_label = "inline";
}

void parse_train(const json& j, RunConfig& rc) {
  Section s(j, "train", {"learning_rate", "steps", "batch_size", "checkpoint_interval", "seed"});
  auto& t = rc.train;
  t.learning_rate = s.number("learning_rate", 0.05);
  const auto& steps = s.require("steps");
  if (steps.is_string()) {
    if (steps.get<std::string>() != "restricted")
      throw ConfigError("'train.steps' must be an integer or \"restricted\"");
    if (!rc.world.model.is_quadratic())
      throw ConfigError("'train.steps' = \"restricted\" needs a quadratic world");
    rc.restricted_steps = true;
    t.steps = restricted_horizon_steps(rc.world.world, rc.world.model, rc.world.base, t.learning_rate);
  } else {
    t.steps = static_cast<long long>(Section::as_count(steps, "train.steps"));
  }
  if (s.has("batch_size")) {
    const auto& b = j.at("batch_size");
    if (b.is_string()) {
      if (b.get<std::string>() != "full") throw ConfigError("'train.batch_size' must be an integer or \"full\"");
      t.batch_size = 0;
    } else {
      t.batch_size = Section::as_count(b, "train.batch_size");
    }
  }
  t.checkpoint_interval = static_cast<long long>(s.count("checkpoint_interval", 1));
  t.seed = s.count("seed", rc.seed);
  t.validate();
}

void parse_utility(const json& j, RunConfig& rc) {
  Section s(j, "utility", {"kind", "weights", "capability", "table"});
  const auto& world = rc.world.world;
  const auto m = world.capability_count();
  auto capability = [&](const json& v, const std::string& what) -> std::size_t {
    if (v.is_string()) return world.capability_index(v.get<std::string>());
    const auto i = Section::as_count(v, what);
    if (i >= m) throw ConfigError("'" + what + "' is out of range");
    return i;
  };
  auto& u = rc.search.utility;
  const auto kind = utility_kind_from_string(s.string("kind"));
  switch (kind) {
    case UtilitySpec::Kind::macro_average: u = UtilitySpec::macro_average(); break;
    case UtilitySpec::Kind::weighted:
      u = UtilitySpec::weighted(number_array(s.require("weights"), "utility.weights"));
      break;
    case UtilitySpec::Kind::single_capability:
      u = UtilitySpec::single(capability(s.require("capability"), "utility.capability"));
      break;
    case UtilitySpec::Kind::custom_table: {
      const auto& tj = s.require("table");
      if (!tj.is_array() || tj.empty()) throw ConfigError("'utility.table' must be a nonempty array");
      std::vector<std::pair<std::size_t, double>> rows;
      for (std::size_t i = 0; i < tj.size(); ++i) {
        const auto path = "utility.table[" + std::to_string(i) + "]";
        Section r(tj[i], path, {"capability", "weight"});
        rows.emplace_back(capability(r.require("capability"), path + ".capability"),
                          r.number("weight", 1.0));
      }
      u = UtilitySpec::custom_table(m, rows);
      break;
    }
  }
  u.validate(m);
}

void parse_theory(const json& j, RunConfig& rc) {
  Section s(j, "theory", {"horizon", "order_horizon", "order_steps", "order_lambda", "lambda_grid"});
  const auto k = rc.world.world.domain_count();
  auto& t = rc.theory;
  if (s.has("horizon")) t.taylor_horizon = s.number("horizon", 0.0);
  t.order_horizon = s.number("order_horizon", t.order_horizon);
  t.order_steps = static_cast<long long>(s.count("order_steps", t.order_steps));
  if (s.has("order_lambda")) t.order_lambda = simplex(j.at("order_lambda"), k, "theory.order_lambda");
  if (s.has("lambda_grid")) t.lambda_grid = simplex_list(j.at("lambda_grid"), k, "theory.lambda_grid");
  if (t.order_horizon <= 0 || t.order_steps < 1)
    throw ConfigError("'theory.order_horizon' and 'theory.order_steps' must be positive");
}

RunConfig parse_checked(const json& j) {
  Section top(j, "",
              {"run_name", "world", "train", "seed_design", "surface", "utility", "search", "mode",
               "hierarchy", "recalibrate", "theory", "consistency", "seed"});
  RunConfig rc;
  rc.run_name = top.string("run_name");
  if (rc.run_name.empty()) throw ConfigError("'run_name' must not be empty");
  rc.seed = top.count("seed", 0);
  parse_world(top.require("world"), rc);
  parse_train(top.require("train"), rc);
  rc.mode = pipeline_mode_from_string(top.string("mode"));

  const auto k = rc.world.world.domain_count();
  auto& st = rc.search;
  st.seed = rc.seed;
  st.boosting.seed = rc.seed;
  if (top.has("seed_design")) {
    Section s(j.at("seed_design"), "seed_design", {"count", "priors"});
    st.seed_count = s.count("count", st.seed_count);
    if (s.has("priors")) st.priors = simplex_list(j.at("seed_design").at("priors"), k, "seed_design.priors");
  }
  if (top.has("surface")) {
    Section s(j.at("surface"), "surface", {"trees", "max_depth", "shrinkage", "min_leaf"});
    st.boosting.trees = s.count("trees", st.boosting.trees);
    st.boosting.max_depth = s.count("max_depth", st.boosting.max_depth);
    st.boosting.shrinkage = s.number("shrinkage", st.boosting.shrinkage);
    st.boosting.min_leaf = s.count("min_leaf", st.boosting.min_leaf);
    st.boosting.validate();
  }
  if (top.has("utility")) parse_utility(j.at("utility"), rc);
  if (top.has("search")) {
    Section s(j.at("search"), "search", {"resolution", "max_points"});
    st.search.resolution = s.number("resolution", st.search.resolution);
    st.search.max_points = s.count("max_points", st.search.max_points);
    if (!(st.search.resolution > 0 && st.search.resolution <= 0.25))
      throw ConfigError("'search.resolution' must be in (0, 0.25]");
  }

  std::vector<std::string> names;
  for (const auto& d : rc.world.world.domains()) names.push_back(d.name);
  if (top.has("hierarchy")) {
    try {
      rc.hierarchy = io::tree_from_json(j.at("hierarchy"));
    } catch (const FormatError& e) {
      throw ConfigError(std::string("'hierarchy': ") + e.what());
    }
    auto leaves = rc.hierarchy.leaf_names();
    auto sorted_names = names;
    std::sort(leaves.begin(), leaves.end());
    std::sort(sorted_names.begin(), sorted_names.end());
    if (leaves != sorted_names)
      throw ConfigError("'hierarchy' leaves must name every training domain exactly once");
  } else if (rc.mode == PipelineMode::hierarchical_top_down ||
             rc.mode == PipelineMode::hierarchical_bottom_up) {
    throw ConfigError("missing required field 'hierarchy' for mode " + to_string(rc.mode));
  } else {
    rc.hierarchy = MixtureTree::flat(names);
  }

  if (top.has("recalibrate")) {
    Section s(j.at("recalibrate"), "recalibrate", {"midpoint_fraction", "total_steps"});
    rc.recalibration.midpoint_fraction = s.number("midpoint_fraction", 0.5);
    rc.recalibration.total_steps = static_cast<long long>(s.count("total_steps", 0));
    const double f = rc.recalibration.midpoint_fraction;
    if (!(f > 0 && f < 1)) throw ConfigError("'recalibrate.midpoint_fraction' must be in (0, 1)");
  }
  if (rc.recalibration.total_steps == 0) rc.recalibration.total_steps = 2 * rc.train.steps;

  if (top.has("theory")) parse_theory(j.at("theory"), rc);
  if (rc.theory.lambda_grid.empty()) rc.theory.lambda_grid = simplex_lattice(k, 10);

  if (top.has("consistency")) {
    Section s(j.at("consistency"), "consistency", {"ratios", "sample"});
    if (s.has("ratios") && s.has("sample"))
      throw ConfigError("'consistency.ratios' and 'consistency.sample' are exclusive");
    if (s.has("ratios"))
      rc.consistency_ratios = simplex_list(j.at("consistency").at("ratios"), k, "consistency.ratios");
    if (s.has("sample")) rc.consistency_ratios = dirichlet_configs(k, s.count("sample", 0), rc.seed);
  }

  if (st.seed_count < k + 1)
    throw ConfigError("'seed_design.count' must be at least K + 1 = " + std::to_string(k + 1));
  return rc;
}

}  // namespace

RunConfig parse_run_config(const json& config, std::optional<std::uint64_t> seed_override) {
  json j = config;
  if (seed_override) {
    if (!j.is_object()) throw ConfigError("config must be an object");
    j["seed"] = *seed_override;
  }
  RunConfig rc;
  try {
    rc = parse_checked(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const auto text = j.dump();
  rc.digest = digest_bytes({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, seed_override);
}

}  // namespace mergemix
