#pragma once

#include <filesystem>
#include <string>

#include "mergemix/domain_world.hpp"
#include "mergemix/model.hpp"

namespace mergemix::testutil {

inline DomainSpec quadratic(const std::string& name, ParameterVector mu, Eigen::MatrixXd a) {
  DomainSpec d;
  d.name = name;
  d.generator = QuadraticGenerator{std::move(mu), std::move(a)};
  return d;
}

inline Eigen::MatrixXd diag(std::initializer_list<double> v) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mergemix_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(MERGEMIX_SOURCE_DIR) / rel;
}

}  // namespace mergemix::testutil
