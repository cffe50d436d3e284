#include "opfa/shift_model.hpp"

#include <string>

namespace opfa {

Vector circular_shift(const Vector& column, int delay) {
  const auto len = static_cast<int>(column.size());
  if (len == 0) return column;
  int shift = delay % len;
  if (shift < 0) shift += len;
  Vector out(len);
  for (int i = 0; i < len; ++i) {
    const int src = i - shift;
    out[i] = column[src < 0 ? src + len : src];
  }
  return out;
}

Matrix build_shifted_factors(const Matrix& factors, const DelayVector& d) {
  if (d.size() != factors.cols())
    throw DimensionError("delay vector has " + std::to_string(d.size()) + " entries, F has " +
                         std::to_string(factors.cols()) + " columns");
  Matrix out(factors.rows(), factors.cols());
  for (int j = 0; j < d.size(); ++j) out.col(j) = circular_shift(factors.col(j), d[j]);
  return out;
}

Matrix window_restrict(const Matrix& m, int window_start, int n) {
  if (window_start < 0 || n < 0 || window_start + n > m.rows())
    throw std::invalid_argument("window [" + std::to_string(window_start) + ", " +
                                std::to_string(window_start + n) + ") outside [0, " +
                                std::to_string(m.rows()) + ")");
  return m.middleRows(window_start, n);
}

Matrix windowed_factors(const Matrix& factors, const DelayVector& d, const Window& window) {
  if (d.size() != factors.cols()) throw DimensionError("delay vector length does not match factor columns");
  const int n_F = static_cast<int>(factors.rows());
  if (window.start < 0 || window.start + window.length > n_F)
    throw std::invalid_argument("observation window outside the factor length");
  Matrix out(window.length, factors.cols());
  for (int k = 0; k < d.size(); ++k)
    for (int t = 0; t < window.length; ++t)
      out(t, k) = factors(source_row(window.start, t, d[k], n_F), k);
  return out;
}

bool in_order_cone(const DelayVector& d, int d_max) {
  for (int i = 0; i < d.size(); ++i) {
    if (d[i] < 0 || d[i] > d_max) return false;
    if (i > 0 && d[i] < d[i - 1]) return false;
  }
  return true;
}

Matrix predict_subject(const Matrix& factors, const DelayVector& d, const Matrix& scores,
                       const Window& window) {
  if (scores.rows() != factors.cols())
    throw DimensionError("score matrix has " + std::to_string(scores.rows()) + " rows, expected " +
                         std::to_string(factors.cols()));
  return windowed_factors(factors, d, window) * scores;
}

bool in_factor_set(const Matrix& factors, double bound, double slack) {
  if ((factors.array() < 0.0).any()) return false;
  return factors.norm() <= bound * (1.0 + slack);
}

}  // namespace opfa
