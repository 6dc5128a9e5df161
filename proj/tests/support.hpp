/* Copyright 2026 The CIM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
=============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "cim/types.hpp"

namespace testing_support {

struct Instance {
  cim::Dictionary d;
  std::vector<double> x;
};

/// Gaussian dictionary with dim in [k, max_dim] so the least-squares term is
/// strictly convex and the minimiser unique. Half of the targets are built
/// from a sparse non-negative code, half are unstructured.
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_dim = 16, std::size_t max_k = 8) {
  std::uniform_int_distribution<std::size_t> kdist(1, max_k);
  const std::size_t k = kdist(rng);
  std::uniform_int_distribution<std::size_t> ddist(k, max_dim);
  const std::size_t dim = ddist(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Instance inst{cim::Dictionary(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k)),
                std::vector<double>(dim)};
  for (Eigen::Index c = 0; c < inst.d.cols(); ++c)
    for (Eigen::Index r = 0; r < inst.d.rows(); ++r) inst.d(r, c) = normal(rng);

  if (unit(rng) < 0.5) {
    Eigen::VectorXd code = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < code.size(); ++c) code[c] = unit(rng) < 0.5 ? 2.0 * unit(rng) : 0.0;
    const Eigen::VectorXd x = inst.d * code;
    for (std::size_t i = 0; i < dim; ++i) inst.x[i] = x[static_cast<Eigen::Index>(i)] + 0.01 * normal(rng);
  } else {
    for (double& v : inst.x) v = normal(rng);
  }
  return inst;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(CIM_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace testing_support
