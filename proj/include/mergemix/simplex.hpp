#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mergemix/errors.hpp"

namespace mergemix {

inline constexpr double kSimplexTolerance = 1e-9;

/// A point on the (K-1)-simplex. Used both as merging weights and as data
/// mixture ratios. Inputs within 1e-9 of the simplex are renormalised by
/// their sum; anything further away throws SimplexError.
class SimplexWeights {
 public:
  SimplexWeights() = default;
  explicit SimplexWeights(std::vector<double> weights);
  SimplexWeights(std::initializer_list<double> weights);

  static SimplexWeights uniform(std::size_t k);
  static SimplexWeights one_hot(std::size_t k, std::size_t index);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& values() const noexcept { return weights_; }
  std::span<const double> span() const noexcept { return weights_; }
  auto begin() const noexcept { return weights_.begin(); }
  auto end() const noexcept { return weights_.end(); }

  /// Index of the single unit weight, or size() when not a corner.
  std::size_t corner_index() const noexcept;

  bool operator==(const SimplexWeights&) const = default;
  /// Lexicographic order, used for deterministic tie-breaking.
  bool operator<(const SimplexWeights& other) const { return weights_ < other.weights_; }

  std::string to_string() const;

 private:
  std::vector<double> weights_;
};

double distance_inf(const SimplexWeights& a, const SimplexWeights& b);

}  // namespace mergemix
