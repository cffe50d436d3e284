#include "opfa/factor_solver.hpp"

#include "opfa/penalties.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace opfa {

Spectrum symmetric_spectrum(const Matrix& Q) {
  if (Q.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

namespace {

Vector project(const Vector& x, Eigen::Index rows, Eigen::Index cols, double bound) {
  const Matrix m = Eigen::Map<const Matrix>(x.data(), rows, cols);
  const Matrix p = project_factor_set(m, bound);
  return Eigen::Map<const Vector>(p.data(), p.size());
}

}  // namespace

Matrix estimate_factors(const QuadraticForm& quadratic, const Matrix& initial, double bound, double tol,
                        int max_iters, SolverReport* report) {
  const auto rows = initial.rows();
  const auto cols = initial.cols();
  if (quadratic.dim() != rows * cols || quadratic.Q.rows() != quadratic.dim() || quadratic.Q.cols() != quadratic.dim())
    throw DimensionError("factor quadratic has dimension " + std::to_string(quadratic.dim()) +
                         ", expected " + std::to_string(rows * cols));
  if (!(bound > 0)) throw std::invalid_argument("frobenius bound must be positive");

  const Spectrum spec = symmetric_spectrum(quadratic.Q);
  if (spec.min < -1e-9 * std::max(1.0, std::abs(spec.max)))
    throw NumericalError("factor quadratic is not positive semidefinite (min eigenvalue " +
                         std::to_string(spec.min) + ")");

  Vector x = project(Eigen::Map<const Vector>(initial.data(), initial.size()), rows, cols, bound);
  double fx = quadratic.value(x);
  SolverReport local;
  local.initial_objective = fx;

  const double L = 2.0 * spec.max * (1.0 + 1e-3);
  if (!(L > 0.0)) {
    // Q == 0 with q == 0 up to the PSD check: every feasible point is optimal.
    if (report) *report = {0, true, fx, fx};
    return Eigen::Map<const Matrix>(x.data(), rows, cols);
  }

  const double floor = std::max(std::abs(quadratic.c) * 1e-15, std::numeric_limits<double>::min());
  Vector y = x;
  double t = 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    Vector z = project(y - quadratic.gradient(y) / L, rows, cols, bound);
    double fz = quadratic.value(z);
    if (fz > fx) {
      // Momentum overshot: restart with a plain projected-gradient step from x,
      // which cannot increase the objective for L above the Lipschitz constant.
      t = 1.0;
      z = project(x - quadratic.gradient(x) / L, rows, cols, bound);
      fz = quadratic.value(z);
      if (fz > fx) {
        local.converged = true;
        break;
      }
    }
    if (!std::isfinite(fz)) throw NumericalError("non-finite factor iterate");
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    t = t_next;
    const double decrease = fx - fz;
    x = std::move(z);
    fx = fz;
    if (decrease <= tol * std::max(std::abs(fx), floor)) {
      local.converged = true;
      ++it;
      break;
    }
  }
  local.iterations = it;
  local.final_objective = fx;
  if (report) *report = local;
  return Eigen::Map<const Matrix>(x.data(), rows, cols);
}

}  // namespace opfa
