#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mergemix/errors.hpp"

namespace mergemix {

/// Flat model parameters. Length is fixed at construction and every entry is
/// finite; arithmetic between vectors of different lengths is rejected.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::size_t size, double fill = 0.0);
  explicit ParameterVector(std::vector<double> values);
  ParameterVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> span() const noexcept { return values_; }
  std::span<double> span() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }
  double* data() noexcept { return values_.data(); }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool operator==(const ParameterVector&) const = default;

 private:
  std::vector<double> values_;
};

struct LinearTerm {
  double coefficient;
  std::reference_wrapper<const ParameterVector> vector;
};

/// base + sum_i c_i * v_i, element-wise. Terms are accumulated in order.
ParameterVector linear_combine(const ParameterVector& base, std::span<const LinearTerm> terms);
ParameterVector linear_combine(const ParameterVector& base,
                               std::initializer_list<LinearTerm> terms);

void require_same_size(const ParameterVector& a, const ParameterVector& b, const char* context);
void require_finite(const ParameterVector& v, const char* context);
bool all_finite(std::span<const double> values) noexcept;

ParameterVector operator+(const ParameterVector& a, const ParameterVector& b);
ParameterVector operator-(const ParameterVector& a, const ParameterVector& b);
ParameterVector operator*(double s, const ParameterVector& v);

double dot(const ParameterVector& a, const ParameterVector& b);
double norm2(const ParameterVector& v);
double norm_inf(const ParameterVector& v);
double distance_inf(const ParameterVector& a, const ParameterVector& b);

// FNV-1a over the IEEE-754 bit patterns; hex encoded.
std::string digest(const ParameterVector& v);
std::string digest_bytes(std::span<const unsigned char> bytes);

}  // namespace mergemix
