#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mergemix/errors.hpp"

namespace mergemix {

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

struct CorrelationReport {
  double rho = 0.0;
  std::size_t n = 0;
  std::vector<double> ranks_x;
  std::vector<double> ranks_y;
  bool had_ties = false;
  std::string tie_handling = "average ranks";
};

/// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman's rho as the Pearson correlation of average ranks. Throws
/// DimensionError on length mismatch or n < 2, DegenerateError when either
/// rank vector has zero variance.
CorrelationReport spearman(std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------
// Normalization and utility
// ---------------------------------------------------------------------------

struct ScoreRange {
  double min = 0.0;
  double max = 1.0;
};

/// (x - min) / (max - min) clamped to [0, 1]; a degenerate range maps to 0.5.
std::vector<double> normalize_scores(const std::vector<double>& raw, ScoreRange range);

struct UtilitySpec {
  enum class Kind { macro_average, weighted, single_capability, custom_table };

  Kind kind = Kind::macro_average;
  std::vector<double> weights;   // weighted (simplex) / custom table (any >= 0)
  std::size_t capability = 0;    // single_capability

  static UtilitySpec macro_average() { return {}; }
  static UtilitySpec weighted(std::vector<double> w);
  static UtilitySpec single(std::size_t m);
  /// Rows of (capability, weight); utility is the weight-normalised sum.
  static UtilitySpec custom_table(std::size_t capabilities,
                                  const std::vector<std::pair<std::size_t, double>>& rows);

  void validate(std::size_t capability_count) const;
  bool operator==(const UtilitySpec&) const = default;
};

std::string to_string(UtilitySpec::Kind kind);
UtilitySpec::Kind utility_kind_from_string(const std::string& s);

double utility(std::span<const double> y, const UtilitySpec& spec);

// ---------------------------------------------------------------------------
// Cost accounting
// ---------------------------------------------------------------------------

struct CostEntry {
  std::string name;
  double model_params_millions = 0.0;  // N
  double tokens_billions = 0.0;        // D
  double runs = 0.0;
};

struct CostRow {
  CostEntry entry;
  double equivalent_cost = 0.0;  // N[B] x D[B] x runs
  double relative_cost = 0.0;    // vs the MergeMix row
  std::string relative_label;    // e.g. "100×", "9.8×"
};

struct CostModel {
  std::vector<CostRow> rows;
  std::string reference = "MergeMix";
};

/// Parses sizes like "8B", "350M", "~1B(sum)" into millions of parameters.
double parse_model_size(const std::string& text);

/// Cost rows relative to the entry named `reference`.
CostModel cost_accounting(const std::vector<CostEntry>& entries,
                          const std::string& reference = "MergeMix");

std::string format_relative_cost(double relative);

}  // namespace mergemix
