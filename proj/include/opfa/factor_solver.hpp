#pragma once

#include "opfa/quadratic.hpp"
#include "opfa/types.hpp"

namespace opfa {

struct SolverReport {
  int iterations = 0;
  bool converged = false;
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

/// Extreme eigenvalues of a symmetric matrix (dense decomposition).
struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};
Spectrum symmetric_spectrum(const Matrix& Q);

/// Minimises x'Qx - 2q'x over {F >= 0, ||F||_F <= bound} by accelerated
/// projected gradient with adaptive restart, starting from `initial`
/// (n_F x f). The objective never increases between accepted iterates.
/// Throws NumericalError when Q has negative curvature beyond round-off.
Matrix estimate_factors(const QuadraticForm& quadratic, const Matrix& initial, double bound, double tol,
                        int max_iters, SolverReport* report = nullptr);

}  // namespace opfa
