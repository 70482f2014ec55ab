#include "mergemix/metrics_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>

namespace mergemix {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

CorrelationReport spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw DimensionError("spearman: length mismatch " + std::to_string(xs.size()) + " vs " +
                         std::to_string(ys.size()));
  if (xs.size() < 2) throw DimensionError("spearman: need at least two observations");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw NumericError("spearman: non-finite observation");
  }
  CorrelationReport r;
  r.n = xs.size();
  r.ranks_x = average_ranks(xs);
  r.ranks_y = average_ranks(ys);

  const double n = static_cast<double>(r.n);
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double dx = r.ranks_x[i] - mean;
    const double dy = r.ranks_y[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateError("spearman: zero rank variance, correlation undefined");
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  auto has_ties = [](std::span<const double> v) {
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  };
  r.had_ties = has_ties(xs) || has_ties(ys);
  return r;
}

std::vector<double> normalize_scores(const std::vector<double>& raw, ScoreRange range) {
  if (!(range.min <= range.max)) throw InvalidArgument("normalize_scores: min > max");
  std::vector<double> out(raw.size());
  const double span = range.max - range.min;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (span == 0.0) {
      out[i] = 0.5;
    } else {
      out[i] = std::clamp((raw[i] - range.min) / span, 0.0, 1.0);
    }
  }
  return out;
}

UtilitySpec UtilitySpec::weighted(std::vector<double> w) {
  UtilitySpec s;
  s.kind = Kind::weighted;
  s.weights = std::move(w);
  return s;
}

UtilitySpec UtilitySpec::single(std::size_t m) {
  UtilitySpec s;
  s.kind = Kind::single_capability;
  s.capability = m;
  return s;
}

UtilitySpec UtilitySpec::custom_table(std::size_t capabilities,
                                      const std::vector<std::pair<std::size_t, double>>& rows) {
  UtilitySpec s;
  s.kind = Kind::custom_table;
  s.weights.assign(capabilities, 0.0);
  for (const auto& [m, w] : rows) {
    if (m >= capabilities) throw DimensionError("custom utility row names unknown capability");
    s.weights[m] += w;
  }
  return s;
}

void UtilitySpec::validate(std::size_t capability_count) const {
  switch (kind) {
    case Kind::macro_average:
      return;
    case Kind::single_capability:
      if (capability >= capability_count)
        throw DimensionError("single-capability utility index out of range");
      return;
    case Kind::weighted:
    case Kind::custom_table: {
      if (weights.size() != capability_count)
        throw DimensionError("utility weights: expected " + std::to_string(capability_count) +
                             ", got " + std::to_string(weights.size()));
      double sum = 0.0;
      for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("utility weights must be >= 0");
        sum += w;
      }
      if (kind == Kind::weighted && std::abs(sum - 1.0) > 1e-9)
        throw InvalidArgument("weighted utility weights must sum to 1");
      if (kind == Kind::custom_table && !(sum > 0.0))
        throw InvalidArgument("custom utility table needs a positive weight");
      return;
    }
  }
}

std::string to_string(UtilitySpec::Kind kind) {
  switch (kind) {
    case UtilitySpec::Kind::macro_average: return "macro-average";
    case UtilitySpec::Kind::weighted: return "weighted";
    case UtilitySpec::Kind::single_capability: return "single-capability";
    case UtilitySpec::Kind::custom_table: return "custom-table";
  }
  return "macro-average";
}

UtilitySpec::Kind utility_kind_from_string(const std::string& s) {
  if (s == "macro-average") return UtilitySpec::Kind::macro_average;
  if (s == "weighted") return UtilitySpec::Kind::weighted;
  if (s == "single-capability") return UtilitySpec::Kind::single_capability;
  if (s == "custom-table") return UtilitySpec::Kind::custom_table;
  throw InvalidArgument("unknown utility kind '" + s + "'");
}

double utility(std::span<const double> y, const UtilitySpec& spec) {
  if (y.empty()) throw DimensionError("utility of an empty score vector");
  spec.validate(y.size());
  switch (spec.kind) {
    case UtilitySpec::Kind::macro_average: {
      double s = 0.0;
      for (double v : y) s += v;
      return s / static_cast<double>(y.size());
    }
    case UtilitySpec::Kind::single_capability:
      return y[spec.capability];
    case UtilitySpec::Kind::weighted: {
      double s = 0.0;
      for (std::size_t m = 0; m < y.size(); ++m) s += spec.weights[m] * y[m];
      return s;
    }
    case UtilitySpec::Kind::custom_table: {
      double s = 0.0, total = 0.0;
      for (std::size_t m = 0; m < y.size(); ++m) {
        s += spec.weights[m] * y[m];
        total += spec.weights[m];
      }
      return s / total;
    }
  }
  return 0.0;
}

double parse_model_size(const std::string& text) {
  static const std::regex re(R"(^\s*~?\s*([0-9]+(?:\.[0-9]+)?)\s*([MmBbTt])\b.*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw InvalidArgument("cannot parse model size '" + text + "'");
  const double value = std::stod(m[1].str());
  switch (m[2].str()[0]) {
    case 'M': case 'm': return value;
    case 'B': case 'b': return value * 1000.0;
    default: return value * 1000000.0;
  }
}

std::string format_relative_cost(double relative) {
  char buf[32];
  if (relative >= 10.0 && relative == std::round(relative)) {
    std::snprintf(buf, sizeof(buf), "%.0f\u00d7", relative);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f\u00d7", relative);
  }
  return buf;
}

CostModel cost_accounting(const std::vector<CostEntry>& entries, const std::string& reference) {
  CostModel model;
  model.reference = reference;
  const CostEntry* ref = nullptr;
  for (const auto& e : entries) {
    if (!(e.model_params_millions > 0.0) || !(e.tokens_billions > 0.0) || !(e.runs > 0.0))
      throw InvalidArgument("cost entry '" + e.name + "' needs positive factors");
    if (e.name == reference) ref = &e;
  }
  if (ref == nullptr) throw InvalidArgument("cost table has no '" + reference + "' row");
  // Millions x billions / 1000 keeps every factor integral until the last step.
  auto cost = [](const CostEntry& e) {
    return e.model_params_millions * e.tokens_billions * e.runs / 1000.0;
  };
  const double ref_cost = cost(*ref);
  for (const auto& e : entries) {
    CostRow row;
    row.entry = e;
    row.equivalent_cost = cost(e);
    row.relative_cost = row.equivalent_cost / ref_cost;
    row.relative_label = format_relative_cost(row.relative_cost);
    model.rows.push_back(std::move(row));
  }
  return model;
}

}  // namespace mergemix
