#pragma once

// Random inputs for property tests. Uses the standard library generator so
// that test data does not depend on the code under test.

#include "fibdim/flag.hpp"

#include <random>

namespace fibdim::testing {

inline Matrix random_matrix(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = n(gen);
  return m;
}

// Random matrix with condition number well below the cap.
inline Matrix random_invertible(int d, std::mt19937_64& gen) {
  for (;;) {
    Matrix m = random_matrix(d, gen);
    const Eigen::JacobiSVD<Matrix> svd(m);
    const Vector s = svd.singularValues();
    if (s(0) < 1e3 * s(d - 1)) return m;
  }
}

inline Flag random_flag(int d, std::mt19937_64& gen) {
  return Flag::from_columns(random_invertible(d, gen));
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline Matrix diag(std::initializer_list<double> entries) {
  Vector v(static_cast<int>(entries.size()));
  int k = 0;
  for (double e : entries) v(k++) = e;
  return v.asDiagonal();
}

}  // namespace fibdim::testing
