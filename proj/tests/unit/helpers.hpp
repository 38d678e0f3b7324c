#pragma once

#include "mff/gaussian.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace mff::testing {

inline MatrixXc random_matrix(int rows, int cols, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXc m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(n(gen), n(gen));
  return m;
}

//! Haar-like random Slater determinant.
inline GaussianState random_state(int L, int N, std::mt19937_64& gen) {
  return renormalize(GaussianState{random_matrix(L, N, gen)});
}

inline MatrixXc random_unitary(int n, std::mt19937_64& gen) { return random_state(n, n, gen).orbitals; }

//! Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mff_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace mff::testing
