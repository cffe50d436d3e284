#include "opfa/score_solver.hpp"

#include "opfa/penalties.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace opfa {

double score_objective(const std::vector<ScoreQuadratic>& quadratics, const std::vector<Matrix>& scores,
                       double lambda, Variant variant) {
  const int S = static_cast<int>(quadratics.size());
  double total = 0.0;
  if (variant == Variant::opfa_c) {
    const Matrix& A = scores.at(0);
    for (const auto& qd : quadratics) total += qd.value(A);
    total += lambda * std::sqrt(static_cast<double>(S)) * A.sum();
  } else {
    for (int s = 0; s < S; ++s) total += quadratics[s].value(scores.at(s));
    total += lambda * group_lasso_penalty(scores);
  }
  return total;
}

namespace {

// One variable's slice of the score problem: x holds f x S (OPFA) or f x 1
// (OPFA-C, with the quadratics already summed over subjects).
struct VariableProblem {
  std::vector<const Matrix*> Q;  // per column of x
  Matrix q;                      // f x cols
  double energy = 0.0;
  double penalty = 0.0;  // lambda (OPFA) or lambda * sqrt(S) (OPFA-C)
  bool shared = false;
  double L = 0.0;

  double value(const Matrix& x) const {
    double v = energy;
    for (Eigen::Index s = 0; s < x.cols(); ++s) v += x.col(s).dot(*Q[s] * x.col(s)) - 2.0 * q.col(s).dot(x.col(s));
    if (shared) {
      v += penalty * x.sum();
    } else {
      for (Eigen::Index j = 0; j < x.rows(); ++j) v += penalty * x.row(j).norm();
    }
    return v;
  }

  Matrix step(const Matrix& y) const {
    Matrix v(y.rows(), y.cols());
    for (Eigen::Index s = 0; s < y.cols(); ++s) v.col(s) = y.col(s) - (2.0 / L) * (*Q[s] * y.col(s) - q.col(s));
    const double threshold = penalty / L;
    if (shared) return (v.array() - threshold).cwiseMax(0.0).matrix();
    for (Eigen::Index j = 0; j < v.rows(); ++j) v.row(j) = nonneg_group_prox(v.row(j).transpose(), threshold).transpose();
    return v;
  }
};

struct VariableResult {
  int iterations = 0;
  bool converged = false;
  bool finite = true;
};

VariableResult solve_variable(const VariableProblem& prob, Matrix& x, double tol, int max_iters) {
  VariableResult res;
  if (!(prob.L > 0.0)) {
    // No curvature: the data term is constant, so the penalty alone decides.
    if (prob.penalty > 0.0) x.setZero();
    res.converged = true;
    return res;
  }
  double fx = prob.value(x);
  const double floor = std::max(prob.energy * 1e-15, std::numeric_limits<double>::min());
  Matrix y = x;
  double t = 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    Matrix z = prob.step(y);
    double fz = prob.value(z);
    if (fz > fx) {
      t = 1.0;
      z = prob.step(x);
      fz = prob.value(z);
      if (fz > fx) {
        res.converged = true;
        break;
      }
    }
    if (!std::isfinite(fz)) {
      res.finite = false;
      break;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    t = t_next;
    const double decrease = fx - fz;
    x = std::move(z);
    fx = fz;
    if (decrease <= tol * std::max(std::abs(fx), floor)) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.iterations = it;
  return res;
}

}  // namespace

std::vector<Matrix> estimate_scores(const std::vector<ScoreQuadratic>& quadratics, double lambda,
                                    Variant variant, double tol, int max_iters,
                                    const std::vector<Matrix>& initial, Execution exec,
                                    SolverReport* report) {
  if (quadratics.empty()) throw DimensionError("no score quadratics");
  if (lambda < 0) throw std::invalid_argument("lambda must be nonnegative");
  const int S = static_cast<int>(quadratics.size());
  const int f = quadratics[0].factors();
  const int p = quadratics[0].variables();
  for (const auto& qd : quadratics)
    if (qd.factors() != f || qd.variables() != p || static_cast<int>(qd.blocks.size()) != p)
      throw DimensionError("score quadratics must share shape");
  const bool shared = variant == Variant::opfa_c;
  const int n_out = shared ? 1 : S;

  std::vector<Matrix> scores(n_out, Matrix::Zero(f, p));
  if (!initial.empty()) {
    if (static_cast<int>(initial.size()) != n_out) throw DimensionError("warm start has the wrong number of matrices");
    for (int s = 0; s < n_out; ++s) {
      if (initial[s].rows() != f || initial[s].cols() != p) throw DimensionError("warm start must be f x p");
      scores[s] = initial[s].cwiseMax(0.0);
    }
  }

  // Assemble per-variable problems and step constants serially so that every
  // error surfaces before the parallel region.
  std::vector<Matrix> summed;  // OPFA-C: sum_s Q_{s,i}
  if (shared) summed.resize(p);
  std::vector<VariableProblem> problems(p);
  for (int i = 0; i < p; ++i) {
    VariableProblem& prob = problems[i];
    prob.shared = shared;
    if (shared) {
      summed[i] = Matrix::Zero(f, f);
      prob.q = Matrix::Zero(f, 1);
      for (const auto& qd : quadratics) {
        summed[i] += qd.blocks[i];
        prob.q.col(0) += qd.rhs.col(i);
        prob.energy += qd.column_energy[i];
      }
      prob.Q = {&summed[i]};
      prob.penalty = lambda * std::sqrt(static_cast<double>(S));
    } else {
      prob.q.resize(f, S);
      for (int s = 0; s < S; ++s) {
        prob.Q.push_back(&quadratics[s].blocks[i]);
        prob.q.col(s) = quadratics[s].rhs.col(i);
        prob.energy += quadratics[s].column_energy[i];
      }
      prob.penalty = lambda;
    }
    double lmax = 0.0;
    for (const Matrix* Q : prob.Q) {
      const Spectrum sp = symmetric_spectrum(*Q);
      if (sp.min < -1e-9 * std::max(1.0, std::abs(sp.max)))
        throw NumericalError("score quadratic block for variable " + std::to_string(i) +
                             " is not positive semidefinite");
      lmax = std::max(lmax, sp.max);
    }
    prob.L = 2.0 * lmax * (1.0 + 1e-3);
  }

  SolverReport local;
  local.initial_objective = score_objective(quadratics, scores, lambda, variant);

  std::vector<VariableResult> results(p);
#pragma omp parallel for schedule(dynamic, 8) if (exec == Execution::parallel)
  for (int i = 0; i < p; ++i) {
    Matrix x(f, n_out);
    for (int s = 0; s < n_out; ++s) x.col(s) = scores[s].col(i);
    results[i] = solve_variable(problems[i], x, tol, max_iters);
    for (int s = 0; s < n_out; ++s) scores[s].col(i) = x.col(s);
  }

  local.converged = true;
  for (const auto& r : results) {
    if (!r.finite) throw NumericalError("non-finite score iterate");
    local.iterations = std::max(local.iterations, r.iterations);
    local.converged = local.converged && r.converged;
  }
  local.final_objective = score_objective(quadratics, scores, lambda, variant);
  if (report) *report = local;
  return scores;
}

}  // namespace opfa
