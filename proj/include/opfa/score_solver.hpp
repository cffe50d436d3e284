#pragma once

#include "opfa/factor_solver.hpp"
#include "opfa/quadratic.hpp"
#include "opfa/types.hpp"

#include <vector>

namespace opfa {

/// Value of sum_s quadratic_s(A_s) + penalty for the given variant. Under
/// OPFA-C `scores` holds one matrix shared by every subject and the penalty
/// is lambda * sqrt(S) * sum(A), the group norm of S identical entries.
double score_objective(const std::vector<ScoreQuadratic>& quadratics, const std::vector<Matrix>& scores,
                       double lambda, Variant variant);

/// Nonnegative scores minimising score_objective by proximal forward-backward
/// iterations with momentum and adaptive restart. The problem separates over
/// variables i, each solved with its own step 1/L_i,
/// L_i = 2 * max_s lambda_max(Q_{s,i}) * (1 + 1e-3).
/// `initial` may be empty (start from zero) or hold a warm start of the
/// variant's shape.
std::vector<Matrix> estimate_scores(const std::vector<ScoreQuadratic>& quadratics, double lambda,
                                    Variant variant, double tol, int max_iters,
                                    const std::vector<Matrix>& initial = {},
                                    Execution exec = Execution::serial, SolverReport* report = nullptr);

}  // namespace opfa
