#include "mergemix/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numeric>
#include <ostream>

#include "mergemix/consistency.hpp"
#include "mergemix/hier_search.hpp"
#include "mergemix/io.hpp"
#include "mergemix/run_config.hpp"
#include "mergemix/theory_probe.hpp"

namespace mergemix {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string text_digest(const std::string& s) {
  return digest_bytes({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

// Writes artifacts atomically under one run directory and remembers them for
// the manifest. Any manifest left by an earlier run is removed up front.
class RunDir {
 public:
  RunDir(fs::path root, std::string command) : root_(std::move(root)), command_(std::move(command)) {
    fs::create_directories(root_);
    fs::remove(root_ / "manifest.json");
    started_ = utc_now();
  }

  void put(const std::string& rel, const std::string& content) {
    io::write_atomic(root_ / rel, content);
    artifacts_.push_back({{"path", rel}, {"digest", text_digest(content)}});
  }

  void finish(const std::string& run_name, const std::string& config_digest, json formats) {
    for (const auto& a : artifacts_) {
      if (!fs::exists(root_ / a["path"].get<std::string>()))
        throw Error("artifact vanished before manifest write: " + a["path"].get<std::string>());
    }
    json m = {{"format", io::kManifestFormat},
              {"command", command_},
              {"run_name", run_name},
              {"config_digest", config_digest},
              {"started_at", started_},
              {"finished_at", utc_now()},
              {"formats", std::move(formats)},
              {"artifacts", artifacts_}};
    io::write_atomic(root_ / "manifest.json", io::dump(m));
  }

 private:
  fs::path root_;
  std::string command_;
  std::string started_;
  json artifacts_ = json::array();
};

std::vector<std::string> domain_names(const World& w) {
  std::vector<std::string> n;
  for (const auto& d : w.domains()) n.push_back(d.name);
  return n;
}

std::vector<std::string> capability_names(const World& w) {
  std::vector<std::string> n;
  for (const auto& d : w.capabilities()) n.push_back(d.name);
  return n;
}

double utility_of(const World& world, const ModelSpec& model, const ParameterVector& theta,
                  const NormalizationContext& ctx, const UtilitySpec& spec) {
  return utility(ctx.normalize(world.raw_scores(model, theta)), spec);
}

json train_json(const RunConfig& rc) {
  return {{"learning_rate", rc.train.learning_rate},
          {"steps", rc.train.steps},
          {"restricted", rc.restricted_steps},
          {"batch_size", rc.train.batch_size},
          {"checkpoint_interval", rc.train.checkpoint_interval},
          {"seed", rc.train.seed}};
}

json search_json(const SearchResult& r) {
  return {{"alpha", io::weights_to_json(r.alpha)},
          {"predicted_utility", r.utility},
          {"lattice_points", r.lattice_points},
          {"refined_points", r.refined_points},
          {"refined_step", r.refined_step}};
}

json design_json(const SeedDesign& d) {
  json rows = json::array();
  for (std::size_t i = 0; i < d.size(); ++i)
    rows.push_back({{"alpha", io::weights_to_json(d.configs[i])}, {"provenance", to_string(d.provenance[i])}});
  return rows;
}

json stages_json(const std::vector<StageRecord>& stages) {
  json rows = json::array();
  for (const auto& s : stages)
    rows.push_back({{"node", s.node},
                    {"weights", io::weights_to_json(s.weights)},
                    {"method", s.method},
                    {"predicted_utility", s.predicted_utility},
                    {"actual_utility", s.actual_utility}});
  return rows;
}

std::string curves_csv(const RecalibrationReport& r) {
  std::string s = "step,static_utility,dynamic_utility\n";
  const auto n = std::min(r.static_curve.size(), r.dynamic_curve.size());
  for (std::size_t i = 0; i < n; ++i)
    s += std::to_string(r.static_curve[i].step) + "," + io::format_real(r.static_curve[i].utility) + "," +
         io::format_real(r.dynamic_curve[i].utility) + "\n";
  return s;
}

template <typename Body>
int guarded(std::ostream& err, const char* command, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "mergemix " << command << ": config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "mergemix " << command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

RunConfig load_or_throw(const CommandOptions& opts) {
  if (opts.config.empty()) throw ConfigError("--config is required");
  if (opts.out.empty()) throw ConfigError("--out is required");
  if (opts.threads < 1) throw ConfigError("--threads must be at least 1");
  return load_run_config(opts.config, opts.seed);
}

}  // namespace

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

int cmd_pipeline(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = load_or_throw(opts);
  } catch (const ConfigError& e) {
    err << "mergemix pipeline: config error: " << e.what() << "\n";
    return kExitUsage;
  }

  return guarded(err, "pipeline", [&] {
    const auto& world = rc.world.world;
    const auto& model = rc.world.model;
    const auto& base = rc.world.base;
    const auto names = domain_names(world);
    const std::size_t threads = opts.threads;
    RunDir dir(opts.out, "pipeline");

    out << "training " << names.size() << " experts for " << rc.train.steps << " steps\n";
    const auto experts = train_all_experts(world, model, base, rc.train, threads);
    std::vector<ParameterVector> params;
    json experts_json = json::array();
    for (const auto& e : experts) {
      dir.put("experts/" + e.domain + ".ckpt", io::checkpoint_text(model, e.final_params));
      dir.put("experts/" + e.domain + ".trajectory.csv", io::trajectory_csv(e));
      params.push_back(e.final_params);
      experts_json.push_back({{"domain", e.domain},
                              {"digest", digest(e.final_params)},
                              {"checkpoint", "experts/" + e.domain + ".ckpt"}});
    }

    json report = {{"format", io::kReportFormat},
                   {"run_name", rc.run_name},
                   {"mode", to_string(rc.mode)},
                   {"seed", rc.seed},
                   {"config_digest", rc.digest},
                   {"world",
                    {{"name", rc.world_label},
                     {"domains", names},
                     {"capabilities", capability_names(world)},
                     {"param_count", model.param_count()}}},
                   {"train", train_json(rc)},
                   {"utility", to_string(rc.search.utility.kind)},
                   {"experts", experts_json}};

    const SurfaceRun* run = nullptr;
    SurfaceRun flat_run;
    std::optional<HierResult> hier;
    ParameterVector final_params;
    SimplexWeights final_alpha;
    const bool hierarchical = rc.mode == PipelineMode::hierarchical_top_down ||
                              rc.mode == PipelineMode::hierarchical_bottom_up;
    const auto problem = MergeProblem::flat(base, params);

    if (hierarchical) {
      HierContext ctx{world, model, base, {}, rc.search, threads};
      for (std::size_t i = 0; i < names.size(); ++i) ctx.experts[names[i]] = params[i];
      hier = rc.mode == PipelineMode::hierarchical_top_down ? optimize_top_down(rc.hierarchy, ctx)
                                                            : optimize_bottom_up(rc.hierarchy, ctx);
      if (!hier->root_run) throw Error("hierarchical search produced no root-stage surface");
      run = &*hier->root_run;
      // Leaf ratios follow the tree's leaf order; report them in domain order.
      const auto leaves = rc.hierarchy.leaf_names();
      std::vector<double> ratios(names.size());
      for (std::size_t i = 0; i < leaves.size(); ++i)
        ratios[world.domain_index(leaves[i])] = hier->leaf_ratios[i];
      final_alpha = SimplexWeights(ratios);
      final_params = merge_leaf_ratios(rc.hierarchy, ctx, hier->leaf_ratios);
    } else {
      flat_run = run_surface_search(problem, world, model, rc.search, threads);
      run = &flat_run;
      final_alpha = run->optimum.alpha;
      final_params = problem.build(final_alpha);
    }

    dir.put("samples.csv", io::samples_csv(run->samples));
    dir.put("surface.model.json", io::dump(io::surface_to_json(run->surface)));

    const auto& ctx = run->samples.context;
    const auto& spec = rc.search.utility;
    const double final_utility = utility_of(world, model, final_params, ctx, spec);
    json corners = json::object();
    double best_baseline = utility_of(world, model, problem.build(SimplexWeights::uniform(names.size())), ctx, spec);
    const double uniform_utility = best_baseline;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double u = utility_of(world, model, params[i], ctx, spec);
      corners[names[i]] = u;
      best_baseline = std::max(best_baseline, u);
    }

    report["seed_design"] = design_json(run->design);
    report["surface"] = {{"training_digest", run->surface.training_digest},
                         {"training_error", training_error(run->surface, run->samples)}};
    report["normalization"] = {{"min", ctx.min}, {"max", ctx.max}};
    report["optimum"] = search_json(run->optimum);
    report["verification"] = io::verification_to_json(run->verification);
    report["final"] = {{"alpha", io::weights_to_json(final_alpha)},
                       {"utility", final_utility},
                       {"digest", digest(final_params)}};
    report["baselines"] = {{"uniform", uniform_utility}, {"corners", corners}};
    report["beats_baselines"] = final_utility >= best_baseline;

    json formats = {{"checkpoint", io::kCheckpointFormat},
                    {"surface", io::kSurfaceFormat},
                    {"report", io::kReportFormat}};

    if (hier) {
      MixtureTree solved = hier->tree;
      json h = {{"tree", io::tree_to_json(solved)},
                {"leaf_names", rc.hierarchy.leaf_names()},
                {"leaf_ratios", io::weights_to_json(hier->leaf_ratios)},
                {"stages", stages_json(hier->stages)}};
      report["hierarchy"] = h;
      dir.put("hierarchy.json", io::dump(h));
      dir.put("leaf_ratios.csv", io::leaf_ratios_csv(rc.hierarchy.leaf_names(), hier->leaf_ratios));
    }

    if (rc.mode == PipelineMode::dynamic_recalibrate) {
      const auto total = rc.recalibration.total_steps;
      const auto mid = static_cast<long long>(std::llround(rc.recalibration.midpoint_fraction * total));
      TrainConfig first = rc.train;
      first.steps = mid;
      first.checkpoint_interval = std::max<long long>(1, std::min(first.checkpoint_interval, std::max(1LL, mid)));
      const auto midpoint = train_on_mixture(world, model, base, final_alpha, first);
      const auto rec = recalibrate(midpoint.final_params, total - mid, world, model, rc.train, rc.search,
                                   *run, threads);
      json r = {{"midpoint_step", mid},
                {"total_steps", total},
                {"midpoint_digest", digest(midpoint.final_params)},
                {"alpha_old", io::weights_to_json(rec.alpha_old)},
                {"alpha_new", io::weights_to_json(rec.alpha_new)},
                {"distance_inf", rec.distance_inf},
                {"rerun_optimum", search_json(rec.rerun.optimum)},
                {"static_final", rec.static_curve.empty() ? 0.0 : rec.static_curve.back().utility},
                {"dynamic_final", rec.dynamic_curve.empty() ? 0.0 : rec.dynamic_curve.back().utility}};
      report["recalibration"] = r;
      dir.put("recalibration.json", io::dump(r));
      dir.put("dynamics.csv", curves_csv(rec));
    }

    dir.put("report.json", io::dump(report));
    dir.finish(rc.run_name, rc.digest, formats);

    out << "optimum alpha " << final_alpha.to_string() << " utility " << io::format_real(final_utility)
        << (report["beats_baselines"].get<bool>() ? " (beats uniform and every corner)\n"
                                                  : " (does not beat every baseline)\n");
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// theory
// ---------------------------------------------------------------------------

int cmd_theory(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = load_or_throw(opts);
  } catch (const ConfigError& e) {
    err << "mergemix theory: config error: " << e.what() << "\n";
    return kExitUsage;
  }

  return guarded(err, "theory", [&] {
    const auto& world = rc.world.world;
    const auto& model = rc.world.model;
    const auto& base = rc.world.base;
    const auto names = domain_names(world);
    const std::size_t k = names.size();
    RunDir dir(opts.out, "theory");

    const double horizon =
        rc.theory.taylor_horizon.value_or(rc.train.learning_rate * static_cast<double>(rc.train.steps));
    const auto ctx = make_taylor_context(world, model, base, horizon);
    const auto responses = curvature_responses(ctx, opts.threads);

    json report = {{"format", io::kTheoryFormat},
                   {"run_name", rc.run_name},
                   {"world", rc.world_label},
                   {"domains", names},
                   {"taylor_horizon", horizon}};

    try {
      const auto g = gamma_matrix(ctx);
      json rows = json::array();
      for (Eigen::Index r = 0; r < g.gamma.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < g.gamma.cols(); ++c) row.push_back(g.gamma(r, c));
        rows.push_back(row);
      }
      report["gamma"] = {{"matrix", rows}, {"diagonally_dominant", g.diagonally_dominant}};
      dir.put("gamma.csv", io::matrix_csv(g.gamma, names));
    } catch (const DegenerateError& e) {
      report["gamma"] = {{"matrix", nullptr}, {"error", e.what()}};
    }

    const auto experts = train_all_experts(world, model, base, rc.train, opts.threads);
    try {
      const auto cos = task_vector_cosine(experts, base);
      json rows = json::array();
      for (Eigen::Index r = 0; r < cos.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < cos.cols(); ++c) row.push_back(cos(r, c));
        rows.push_back(row);
      }
      report["task_vector_cosine"] = {{"matrix", rows}, {"train_steps", rc.train.steps}};
      dir.put("cosine.csv", io::matrix_csv(cos, names));
    } catch (const DegenerateError& e) {
      report["task_vector_cosine"] = {{"matrix", nullptr}, {"error", e.what()}};
    }

    std::string csv;
    for (std::size_t i = 1; i <= k; ++i) csv += "lambda_" + std::to_string(i) + ",";
    csv += "delta_norm,cross_norm,self_norm,identity_error\n";
    json sweep = json::array();
    for (const auto& lambda : rc.theory.lambda_grid) {
      const auto d = discrepancy_delta(ctx, responses, lambda);
      const double dn = std::sqrt(dot(d.delta, d.delta));
      const double cn = std::sqrt(dot(d.cross, d.cross));
      const double sn = std::sqrt(dot(d.self, d.self));
      sweep.push_back({{"lambda", io::weights_to_json(lambda)},
                       {"delta_norm", dn},
                       {"cross_norm", cn},
                       {"self_norm", sn},
                       {"identity_error", d.identity_error}});
      for (double l : lambda) csv += io::format_real(l) + ",";
      csv += io::format_real(dn) + "," + io::format_real(cn) + "," + io::format_real(sn) + "," +
             io::format_real(d.identity_error) + "\n";
    }
    report["delta_sweep"] = sweep;
    dir.put("delta_sweep.csv", csv);

    if (model.is_quadratic()) {
      const auto lambda = rc.theory.order_lambda.value_or(SimplexWeights::uniform(k));
      const auto s = validate_order(world, model, base, lambda, rc.theory.order_horizon, rc.theory.order_steps);
      json pts = json::array();
      for (const auto& p : s.points)
        pts.push_back({{"horizon", p.horizon},
                       {"learning_rate", p.learning_rate},
                       {"steps", p.steps},
                       {"error", p.error},
                       {"delta_norm", p.delta_norm},
                       {"residual", p.residual}});
      report["order_of_error"] = {
          {"lambda", io::weights_to_json(s.lambda)},
          {"points", pts},
          {"error_ratio", s.error_ratio ? json(*s.error_ratio) : json(nullptr)},
          {"residual_ratio", s.residual_ratio ? json(*s.residual_ratio) : json(nullptr)}};
    } else {
      report["order_of_error"] = nullptr;
    }

    dir.put("theory_report.json", io::dump(report));
    dir.finish(rc.run_name, rc.digest, {{"theory_report", io::kTheoryFormat}});
    if (report["gamma"]["matrix"].is_array()) out << "gamma " << report["gamma"]["matrix"].dump() << "\n";
    if (report["order_of_error"].is_object())
      out << "order-of-error ratio " << report["order_of_error"]["error_ratio"].dump() << ", residual ratio "
          << report["order_of_error"]["residual_ratio"].dump() << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

int cmd_consistency(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = load_or_throw(opts);
  } catch (const ConfigError& e) {
    err << "mergemix consistency: config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (rc.consistency_ratios.size() < 3) {
    err << "mergemix consistency: need at least 3 mixture ratios, got " << rc.consistency_ratios.size()
        << "\nusage: mergemix consistency --config FILE --out DIR\n"
           "  the config must set consistency.ratios (list of simplex points) or consistency.sample (count)\n";
    return kExitUsage;
  }

  return guarded(err, "consistency", [&] {
    const auto& w = rc.world;
    RunDir dir(opts.out, "consistency");
    const auto rep = rank_consistency_experiment(w.world, w.model, w.base, rc.consistency_ratios, rc.train,
                                                 rc.search.utility, opts.threads);
    json j = {{"run_name", rc.run_name},
              {"world", rc.world_label},
              {"train", train_json(rc)},
              {"correlation", io::correlation_to_json(rep.correlation)},
              {"mean_gap", rep.mean_gap}};
    dir.put("consistency.json", io::dump(j));
    dir.put("rank_table.csv", io::rank_table_csv(rep));
    dir.finish(rc.run_name, rc.digest, json::object());
    out << "spearman rho = " << io::format_real(rep.correlation.rho) << " over " << rep.rows.size()
        << " mixtures\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// cost
// ---------------------------------------------------------------------------

std::vector<CostEntry> parse_cost_entries(const json& j, std::string* reference) {
  if (!j.is_object()) throw ConfigError("cost entries file must be a JSON object");
  for (const auto& [key, v] : j.items())
    if (key != "reference" && key != "entries") throw ConfigError("unknown key '" + key + "' in cost entries");
  if (reference) *reference = j.value("reference", std::string("MergeMix"));
  if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
    throw ConfigError("cost entries file needs a nonempty 'entries' array");
  std::vector<CostEntry> out;
  for (const auto& e : j["entries"]) {
    if (!e.is_object()) throw ConfigError("every cost entry must be an object");
    for (const auto& [key, v] : e.items())
      if (key != "name" && key != "model_size" && key != "tokens_billions" && key != "runs")
        throw ConfigError("unknown key '" + key + "' in cost entry");
    try {
      CostEntry c;
      c.name = e.at("name").get<std::string>();
      const auto& size = e.at("model_size");
      c.model_params_millions = size.is_string() ? parse_model_size(size.get<std::string>())
                                                 : size.get<double>() * 1000.0;
      c.tokens_billions = e.at("tokens_billions").get<double>();
      c.runs = e.at("runs").get<double>();
      out.push_back(std::move(c));
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("malformed cost entry: ") + ex.what());
    } catch (const InvalidArgument& ex) {
      throw ConfigError(ex.what());
    }
  }
  return out;
}

std::string cost_csv(const CostModel& cost) {
  std::string s = "name,model_params_billions,tokens_billions,runs,equivalent_cost,relative_cost,relative_label\n";
  for (const auto& r : cost.rows)
    s += r.entry.name + "," + io::format_real(r.entry.model_params_millions / 1000.0) + "," +
         io::format_real(r.entry.tokens_billions) + "," + io::format_real(r.entry.runs) + "," +
         io::format_real(r.equivalent_cost) + "," + io::format_real(r.relative_cost) + "," + r.relative_label +
         "\n";
  return s;
}

int cmd_cost(const fs::path& entries, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  CostModel cost;
  try {
    if (entries.empty()) throw ConfigError("--entries is required");
    json j;
    try {
      j = json::parse(io::read_text(entries));
    } catch (const json::exception& e) {
      throw ConfigError(entries.string() + " is not valid JSON: " + e.what());
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    std::string reference;
    const auto rows = parse_cost_entries(j, &reference);
    cost = cost_accounting(rows, reference);
  } catch (const ConfigError& e) {
    err << "mergemix cost: " << e.what() << "\nusage: mergemix cost --entries FILE [--out DIR]\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "mergemix cost: " << e.what() << "\n";
    return kExitUsage;
  }

  return guarded(err, "cost", [&] {
    for (const auto& r : cost.rows) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-16s %10g %8s\n", r.entry.name.c_str(), r.equivalent_cost,
                    r.relative_label.c_str());
      out << line;
    }
    if (!out_dir.empty()) {
      RunDir dir(out_dir, "cost");
      dir.put("cost_table.csv", cost_csv(cost));
      dir.put("cost_report.json", io::dump(io::cost_to_json(cost)));
      dir.finish("cost", text_digest(io::read_text(entries)), json::object());
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// export-heatmap
// ---------------------------------------------------------------------------

std::vector<HeatmapRow> heatmap_rows(const SurfaceModel& surface, const std::string& target, double resolution,
                                     std::optional<double> top_fraction) {
  if (!(resolution > 0 && resolution <= 1)) throw InvalidArgument("resolution must be in (0, 1]");
  if (top_fraction && !(*top_fraction > 0 && *top_fraction <= 1))
    throw InvalidArgument("top fraction must be in (0, 1]");
  std::optional<std::size_t> capability;
  if (target != "utility") {
    const auto& names = surface.capability_names;
    const auto it = std::find(names.begin(), names.end(), target);
    if (it != names.end()) {
      capability = static_cast<std::size_t>(it - names.begin());
    } else if (!target.empty() && std::all_of(target.begin(), target.end(), [](unsigned char c) { return std::isdigit(c) != 0; }) &&
               std::stoul(target) < names.size()) {
      capability = std::stoul(target);
    } else {
      throw InvalidArgument("unknown capability '" + target + "'");
    }
  }

  const auto divisions = static_cast<std::size_t>(std::ceil(1.0 / resolution - 1e-9));
  if (simplex_lattice_size(surface.k, divisions) > SearchOptions{}.max_points)
    throw BudgetError("heatmap lattice exceeds " + std::to_string(SearchOptions{}.max_points) + " points");
  std::vector<HeatmapRow> rows;
  for (auto& a : simplex_lattice(surface.k, divisions)) {
    const auto y = predict(surface, a);
    const double v = capability ? y[*capability] : utility(y, UtilitySpec::macro_average());
    rows.push_back({std::move(a), v});
  }
  if (!top_fraction) return rows;

  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(*top_fraction * static_cast<double>(rows.size()) + 1e-9)));
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].value > rows[b].value; });
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<HeatmapRow> kept;
  for (auto i : order) kept.push_back(rows[i]);
  return kept;
}

std::string heatmap_csv(const std::vector<HeatmapRow>& rows) {
  std::string s;
  const std::size_t k = rows.empty() ? 0 : rows.front().alpha.size();
  for (std::size_t i = 1; i <= k; ++i) s += "alpha_" + std::to_string(i) + ",";
  s += "predicted\n";
  for (const auto& r : rows) {
    for (double a : r.alpha) s += io::format_real(a) + ",";
    s += io::format_real(r.value) + "\n";
  }
  return s;
}

int cmd_export_heatmap(const HeatmapOptions& opts, std::ostream& out, std::ostream& err) {
  SurfaceModel surface;
  try {
    if (opts.surface.empty()) throw ConfigError("--surface is required");
    try {
      surface = io::surface_from_json(json::parse(io::read_text(opts.surface)));
    } catch (const json::exception& e) {
      throw ConfigError(opts.surface.string() + " is not valid JSON: " + e.what());
    }
  } catch (const Error& e) {
    err << "mergemix export-heatmap: " << e.what()
        << "\nusage: mergemix export-heatmap --surface FILE [--target NAME|INDEX|utility] [--resolution R]"
           " [--filter-top] [--top-fraction F] [--out FILE]\n";
    return kExitUsage;
  }

  std::vector<HeatmapRow> rows;
  try {
    rows = heatmap_rows(surface, opts.target, opts.resolution,
                        opts.filter_top ? std::optional<double>(opts.top_fraction) : std::nullopt);
  } catch (const InvalidArgument& e) {
    err << "mergemix export-heatmap: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "mergemix export-heatmap: " << e.what() << "\n";
    return kExitFailure;
  }
  return guarded(err, "export-heatmap", [&] {
    const auto csv = heatmap_csv(rows);
    if (opts.out.empty()) {
      out << csv;
    } else {
      io::write_atomic(opts.out, csv);
      out << "wrote " << rows.size() << " rows to " << opts.out.string() << "\n";
    }
    return kExitOk;
  });
}

}  // namespace mergemix
