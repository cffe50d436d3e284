#pragma once

#include "opfa/types.hpp"

#include <vector>

namespace opfa {

/// Sum over (factor j, variable i) of the Euclidean norm of the S-vector
/// ([A_1]_{j,i}, ..., [A_S]_{j,i}).
double group_lasso_penalty(const std::vector<Matrix>& scores);

/// First-order difference operator, (len - 1) x len, rows e_{i+1} - e_i.
Matrix first_difference(int len);

/// Sum over columns of ||W F_i||^2.
double tv_penalty(const Matrix& factors, const Matrix& W);

/// argmin_{x >= 0} 1/2 ||x - v||^2 + threshold * ||x||_2.
Vector nonneg_group_prox(const Vector& v, double threshold);

/// Euclidean projection onto {F >= 0, ||F||_F <= bound}.
Matrix project_factor_set(const Matrix& factors, double bound);

}  // namespace opfa
