#include "mergemix/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mergemix::io {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

json model_spec_to_json(const ModelSpec& model) {
  if (model.is_quadratic()) return {{"kind", "quadratic-world"}, {"dimension", model.param_count()}};
  const auto& n = model.net();
  return {{"kind", "toy-net"},
          {"input_dim", n.input_dim},
          {"hidden_dim", n.hidden_dim},
          {"output_dim", n.output_dim},
          {"activation", to_string(n.activation)}};
}

ModelSpec model_spec_from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "quadratic-world") return ModelSpec::quadratic_world(j.at("dimension").get<std::size_t>());
    if (kind == "toy-net")
      return ModelSpec::toy_net(j.at("input_dim").get<std::size_t>(),
                                j.at("hidden_dim").get<std::size_t>(),
                                j.at("output_dim").get<std::size_t>(),
                                activation_from_string(j.value("activation", "tanh")));
    throw FormatError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model spec: ") + e.what());
  }
}

std::string checkpoint_text(const ModelSpec& model, const ParameterVector& params) {
  model.check_params(params, "checkpoint");
  std::string s = "{\n";
  s += "  \"format\": \"" + std::string(kCheckpointFormat) + "\",\n";
  s += "  \"model_spec\": " + model_spec_to_json(model).dump() + ",\n";
  s += "  \"param_count\": " + std::to_string(params.size()) + ",\n";
  s += "  \"params\": [";
  for (std::size_t i = 0; i < params.size(); ++i) {
    s += (i ? ", " : "") + format_real(params[i]);
  }
  s += "],\n";
  s += "  \"digest\": \"" + digest(params) + "\"\n}\n";
  return s;
}

Checkpoint parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat)
    throw FormatError("not a " + std::string(kCheckpointFormat) + " checkpoint");
  Checkpoint c;
  c.model = model_spec_from_json(j.at("model_spec"));
  std::vector<double> values;
  try {
    values = j.at("params").get<std::vector<double>>();
    c.digest = j.at("digest").get<std::string>();
    if (j.at("param_count").get<std::size_t>() != values.size())
      throw FormatError("checkpoint param_count does not match its params");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
  c.params = ParameterVector(std::move(values));
  c.model.check_params(c.params, "checkpoint");
  if (digest(c.params) != c.digest) throw FormatError("checkpoint digest mismatch");
  return c;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

void header(std::string& s, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += "\n";
}

void append_reals(std::string& s, const std::vector<double>& xs, bool leading_comma) {
  for (std::size_t i = 0; i < xs.size(); ++i) s += ((i || leading_comma) ? "," : "") + format_real(xs[i]);
}

}  // namespace

std::string samples_csv(const SampleSet& set) {
  std::string s;
  if (set.samples.empty()) return s;
  const std::size_t k = set.samples.front().alpha.size();
  const std::size_t m = set.samples.front().y.size();
  std::vector<std::string> cols;
  for (std::size_t i = 1; i <= k; ++i) cols.push_back("alpha_" + std::to_string(i));
  for (std::size_t i = 1; i <= m; ++i) cols.push_back("y_" + std::to_string(i));
  cols.push_back("digest");
  header(s, cols);
  for (const auto& smp : set.samples) {
    append_reals(s, smp.alpha.values(), false);
    append_reals(s, smp.y, true);
    s += "," + smp.digest + "\n";
  }
  return s;
}

std::string trajectory_csv(const ExpertArtifact& art) {
  std::string s;
  std::vector<std::string> cols{"step"};
  if (!art.trajectory.empty()) {
    for (const auto& sc : art.trajectory.front().scores) {
      cols.push_back(sc.domain + "_raw");
      cols.push_back(sc.domain + "_normalized");
    }
  }
  header(s, cols);
  for (const auto& p : art.trajectory) {
    s += std::to_string(p.step);
    for (const auto& sc : p.scores) s += "," + format_real(sc.raw) + "," + format_real(sc.normalized);
    s += "\n";
  }
  return s;
}

std::string rank_table_csv(const ConsistencyReport& rep) {
  std::string s;
  const std::size_t k = rep.rows.empty() ? 0 : rep.rows.front().lambda.size();
  std::vector<std::string> cols;
  for (std::size_t i = 1; i <= k; ++i) cols.push_back("lambda_" + std::to_string(i));
  for (const char* c : {"merged_score", "trained_score", "merged_rank", "trained_rank"}) cols.push_back(c);
  header(s, cols);
  for (const auto& r : rep.rows) {
    append_reals(s, r.lambda.values(), false);
    append_reals(s, {r.merged_score, r.trained_score, r.merged_rank, r.trained_rank}, true);
    s += "\n";
  }
  return s;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(m.rows()) != names.size() || m.rows() != m.cols())
    throw DimensionError("matrix_csv: names do not match a square matrix");
  std::string s;
  std::vector<std::string> cols{"domain"};
  cols.insert(cols.end(), names.begin(), names.end());
  header(s, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    s += names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += "," + format_real(m(r, c));
    s += "\n";
  }
  return s;
}

std::string leaf_ratios_csv(const std::vector<std::string>& leaves, const SimplexWeights& ratios) {
  if (leaves.size() != ratios.size()) throw DimensionError("leaf_ratios_csv: size mismatch");
  std::string s = "leaf,ratio\n";
  for (std::size_t i = 0; i < leaves.size(); ++i) s += leaves[i] + "," + format_real(ratios[i]) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

json weights_to_json(const SimplexWeights& w) { return w.values(); }

SimplexWeights weights_from_json(const json& j) {
  try {
    return SimplexWeights(j.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("weights must be an array of numbers: ") + e.what());
  }
}

json surface_to_json(const SurfaceModel& s) {
  json regs = json::array();
  for (const auto& r : s.regressors) {
    json trees = json::array();
    for (const auto& t : r.trees()) {
      json nodes = json::array();
      for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      trees.push_back(std::move(nodes));
    }
    regs.push_back({{"base_score", r.base_score()}, {"trees", std::move(trees)}});
  }
  return {{"format", kSurfaceFormat},
          {"k", s.k},
          {"capability_names", s.capability_names},
          {"params",
           {{"trees", s.params.trees},
            {"max_depth", s.params.max_depth},
            {"shrinkage", s.params.shrinkage},
            {"min_leaf", s.params.min_leaf},
            {"seed", s.params.seed}}},
          {"training_digest", s.training_digest},
          {"regressors", std::move(regs)}};
}

SurfaceModel surface_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kSurfaceFormat)
      throw FormatError("not a " + std::string(kSurfaceFormat) + " surface");
    SurfaceModel s;
    s.k = j.at("k").get<std::size_t>();
    s.capability_names = j.at("capability_names").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    s.params.trees = p.at("trees").get<std::size_t>();
    s.params.max_depth = p.at("max_depth").get<std::size_t>();
    s.params.shrinkage = p.at("shrinkage").get<double>();
    s.params.min_leaf = p.at("min_leaf").get<std::size_t>();
    s.params.seed = p.at("seed").get<std::uint64_t>();
    s.training_digest = j.at("training_digest").get<std::string>();
    for (const auto& r : j.at("regressors")) {
      std::vector<RegressionTree> trees;
      for (const auto& t : r.at("trees")) {
        RegressionTree tree;
        for (const auto& n : t) {
          TreeNode node;
          node.feature = n.at(0).get<int>();
          node.threshold = n.at(1).get<double>();
          node.left = n.at(2).get<int>();
          node.right = n.at(3).get<int>();
          node.value = n.at(4).get<double>();
          const auto count = static_cast<int>(t.size());
          if (node.feature >= 0 &&
              (node.feature >= static_cast<int>(s.k) || node.left <= 0 || node.right <= 0 ||
               node.left >= count || node.right >= count))
            throw FormatError("surface tree node references are out of range");
          tree.nodes.push_back(node);
        }
        if (tree.nodes.empty()) throw FormatError("surface tree without nodes");
        trees.push_back(std::move(tree));
      }
      s.regressors.emplace_back(r.at("base_score").get<double>(), std::move(trees), s.params);
    }
    if (s.regressors.size() != s.capability_names.size())
      throw FormatError("surface has " + std::to_string(s.regressors.size()) + " regressors but " +
                        std::to_string(s.capability_names.size()) + " capability names");
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed surface model: ") + e.what());
  }
}

json verification_to_json(const VerificationReport& r) {
  return {{"alpha", weights_to_json(r.alpha)},
          {"predicted", r.predicted},
          {"actual_raw", r.actual_raw},
          {"actual", r.actual},
          {"gap", r.gap},
          {"predicted_utility", r.predicted_utility},
          {"actual_utility", r.actual_utility},
          {"merged_digest", r.merged_digest}};
}

VerificationReport verification_from_json(const json& j) {
  try {
    VerificationReport r;
    r.alpha = weights_from_json(j.at("alpha"));
    r.predicted = j.at("predicted").get<std::vector<double>>();
    r.actual_raw = j.at("actual_raw").get<std::vector<double>>();
    r.actual = j.at("actual").get<std::vector<double>>();
    r.gap = j.at("gap").get<std::vector<double>>();
    r.predicted_utility = j.at("predicted_utility").get<double>();
    r.actual_utility = j.at("actual_utility").get<double>();
    r.merged_digest = j.at("merged_digest").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed verification report: ") + e.what());
  }
}

namespace {

json node_to_json(const MixtureNode& n) {
  json j = {{"name", n.name}};
  if (!n.is_leaf()) {
    json kids = json::array();
    for (const auto& c : n.children) kids.push_back(node_to_json(c));
    j["children"] = std::move(kids);
  }
  if (n.weights) j["weights"] = weights_to_json(*n.weights);
  return j;
}

MixtureNode node_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("mixture tree node must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "name" && key != "children" && key != "weights")
      throw FormatError("unknown key '" + key + "' in mixture tree node");
  }
  MixtureNode n;
  try {
    n.name = j.at("name").get<std::string>();
  } catch (const json::exception&) {
    throw FormatError("mixture tree node without a string name");
  }
  if (j.contains("children")) {
    if (!j["children"].is_array() || j["children"].empty())
      throw FormatError("children of '" + n.name + "' must be a nonempty array");
    for (const auto& c : j["children"]) n.children.push_back(node_from_json(c));
  }
  if (j.contains("weights")) n.weights = weights_from_json(j["weights"]);
  return n;
}

}  // namespace

json tree_to_json(const MixtureTree& tree) { return node_to_json(tree.root); }

MixtureTree tree_from_json(const json& j) {
  MixtureTree t;
  t.root = node_from_json(j);
  try {
    t.validate();
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  return t;
}

json correlation_to_json(const CorrelationReport& r) {
  return {{"rho", r.rho},
          {"n", r.n},
          {"ranks_x", r.ranks_x},
          {"ranks_y", r.ranks_y},
          {"had_ties", r.had_ties},
          {"tie_handling", r.tie_handling}};
}

json cost_to_json(const CostModel& cost) {
  json rows = json::array();
  for (const auto& r : cost.rows) {
    rows.push_back({{"name", r.entry.name},
                    {"model_params_billions", r.entry.model_params_millions / 1000.0},
                    {"tokens_billions", r.entry.tokens_billions},
                    {"runs", r.entry.runs},
                    {"equivalent_cost", r.equivalent_cost},
                    {"relative_cost", r.relative_cost},
                    {"relative_label", r.relative_label}});
  }
  return {{"reference", cost.reference}, {"rows", std::move(rows)}};
}

}  // namespace mergemix::io
