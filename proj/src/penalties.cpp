#include "opfa/penalties.hpp"

#include <cmath>

namespace opfa {

double group_lasso_penalty(const std::vector<Matrix>& scores) {
  if (scores.empty()) return 0.0;
  const auto f = scores[0].rows();
  const auto p = scores[0].cols();
  for (const auto& a : scores)
    if (a.rows() != f || a.cols() != p) throw DimensionError("score matrices must share shape");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) {
      double sq = 0.0;
      for (const auto& a : scores) sq += a(j, i) * a(j, i);
      total += std::sqrt(sq);
    }
  }
  return total;
}

Matrix first_difference(int len) {
  if (len < 2) return Matrix::Zero(0, std::max(len, 0));
  Matrix W = Matrix::Zero(len - 1, len);
  for (int i = 0; i + 1 < len; ++i) {
    W(i, i) = -1.0;
    W(i, i + 1) = 1.0;
  }
  return W;
}

double tv_penalty(const Matrix& factors, const Matrix& W) {
  if (W.cols() != factors.rows()) throw DimensionError("difference operator does not match factor length");
  return (W * factors).squaredNorm();
}

Vector nonneg_group_prox(const Vector& v, double threshold) {
  Vector x = v.cwiseMax(0.0);
  const double norm = x.norm();
  if (norm <= threshold || norm == 0.0) return Vector::Zero(v.size());
  x *= 1.0 - threshold / norm;
  return x;
}

Matrix project_factor_set(const Matrix& factors, double bound) {
  Matrix out = factors.cwiseMax(0.0);
  const double norm = out.norm();
  if (norm > bound) out *= bound / norm;
  return out;
}

}  // namespace opfa
