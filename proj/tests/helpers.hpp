#pragma once

#include "opfa/shift_model.hpp"
#include "opfa/types.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testing {

using opfa::DelayVector;
using opfa::Matrix;
using opfa::Vector;

inline Matrix uniform(int rows, int cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

/// 0/1 mask with roughly `missing` of the entries zero.
inline Matrix random_mask(int rows, int cols, double missing, std::mt19937_64& rng) {
  std::bernoulli_distribution drop(missing);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = drop(rng) ? 0.0 : 1.0;
  return m;
}

inline DelayVector random_cone_point(int f, int d_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, d_max);
  std::vector<int> v(f);
  for (auto& x : v) x = u(rng);
  std::sort(v.begin(), v.end());
  return DelayVector(v);
}

/// Masked residual energy computed entry by entry from the model definition.
inline double direct_residual(const Matrix& X, const Matrix& F, const DelayVector& d, const Matrix& A,
                              const Matrix& mask, int window_start) {
  const int n = static_cast<int>(X.rows()), p = static_cast<int>(X.cols());
  const int n_F = static_cast<int>(F.rows()), f = static_cast<int>(F.cols());
  double total = 0.0;
  for (int t = 0; t < n; ++t)
    for (int i = 0; i < p; ++i) {
      double pred = 0.0;
      for (int k = 0; k < f; ++k) {
        int r = ((window_start + t - d[k]) % n_F + n_F) % n_F;
        pred += F(r, k) * A(k, i);
      }
      const double e = X(t, i) - pred;
      total += mask(t, i) * e * e;
    }
  return total;
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
