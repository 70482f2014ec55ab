#include "mergemix/param_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace mergemix {

namespace {

void check_nonempty(std::size_t n) {
  if (n == 0) throw DimensionError("parameter vector must have at least one entry");
}

}  // namespace

ParameterVector::ParameterVector(std::size_t size, double fill) : values_(size, fill) {
  check_nonempty(size);
  if (!std::isfinite(fill)) throw NumericError("non-finite fill value for parameter vector");
}

ParameterVector::ParameterVector(std::vector<double> values) : values_(std::move(values)) {
  check_nonempty(values_.size());
  if (!all_finite(values_)) throw NumericError("parameter vector contains non-finite entries");
}

ParameterVector::ParameterVector(std::initializer_list<double> values)
    : ParameterVector(std::vector<double>(values)) {}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void require_same_size(const ParameterVector& a, const ParameterVector& b, const char* context) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(context) + ": length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

void require_finite(const ParameterVector& v, const char* context) {
  if (!all_finite(v.span())) throw NumericError(std::string(context) + ": non-finite result");
}

ParameterVector linear_combine(const ParameterVector& base, std::span<const LinearTerm> terms) {
  for (const auto& t : terms) require_same_size(base, t.vector.get(), "linear_combine");
  ParameterVector out = base;
  for (const auto& t : terms) {
    const auto& v = t.vector.get();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.coefficient * v[i];
  }
  require_finite(out, "linear_combine");
  return out;
}

ParameterVector linear_combine(const ParameterVector& base,
                               std::initializer_list<LinearTerm> terms) {
  return linear_combine(base, std::span<const LinearTerm>(terms.begin(), terms.size()));
}

ParameterVector operator+(const ParameterVector& a, const ParameterVector& b) {
  require_same_size(a, b, "operator+");
  ParameterVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  require_finite(out, "operator+");
  return out;
}

ParameterVector operator-(const ParameterVector& a, const ParameterVector& b) {
  require_same_size(a, b, "operator-");
  ParameterVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  require_finite(out, "operator-");
  return out;
}

ParameterVector operator*(double s, const ParameterVector& v) {
  ParameterVector out = v;
  for (auto& x : out.span()) x *= s;
  require_finite(out, "operator*");
  return out;
}

double dot(const ParameterVector& a, const ParameterVector& b) {
  require_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const ParameterVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(const ParameterVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double distance_inf(const ParameterVector& a, const ParameterVector& b) {
  require_same_size(a, b, "distance_inf");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string digest_bytes(std::span<const unsigned char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest(const ParameterVector& v) {
  std::vector<unsigned char> bytes;
  bytes.reserve(v.size() * 8);
  for (double x : v) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  return digest_bytes(bytes);
}

}  // namespace mergemix
