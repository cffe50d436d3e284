#include "opfa/driver.hpp"

#include "opfa/clustering.hpp"
#include "opfa/delay_solver.hpp"
#include "opfa/factor_solver.hpp"
#include "opfa/penalties.hpp"
#include "opfa/quadratic.hpp"
#include "opfa/score_solver.hpp"
#include "opfa/shift_model.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace opfa {

double residual_energy(const Matrix& factors, const std::vector<Matrix>& scores,
                       const std::vector<DelayVector>& delays, const ObservationSet& data, const Window& window) {
  const int S = data.num_subjects();
  if (static_cast<int>(delays.size()) != S) throw DimensionError("one delay vector per subject is required");
  if (scores.size() != 1 && static_cast<int>(scores.size()) != S)
    throw DimensionError("scores must hold S matrices or a single shared matrix");
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    const Matrix& A = scores.size() == 1 ? scores[0] : scores[s];
    const Matrix residual = data.subjects[s] - predict_subject(factors, delays[s], A, window);
    total += data.masks[s].cwiseProduct(residual).squaredNorm();
  }
  return total;
}

double opfa_objective(const Matrix& factors, const std::vector<Matrix>& scores,
                      const std::vector<DelayVector>& delays, const ObservationSet& data,
                      const ModelConfig& config, const Matrix& W) {
  const int S = data.num_subjects();
  if (!in_factor_set(factors, config.frobenius_bound, 1e-9))
    throw NumericalError((factors.array() < 0.0).any() ? "infeasible iterate: factors have negative entries"
                                                        : "infeasible iterate: factors exceed the Frobenius bound");
  for (int s = 0; s < static_cast<int>(delays.size()); ++s)
    if (!in_order_cone(delays[s], config.d_max))
      throw NumericalError("infeasible iterate: delays of subject " + std::to_string(s) +
                           " leave the order-preserving cone");
  for (const auto& A : scores)
    if ((A.array() < 0.0).any()) throw NumericalError("infeasible iterate: negative scores");

  const double fit = residual_energy(factors, scores, delays, data, window_of(config, data.rows()));
  double p1 = 0.0;
  if (scores.size() == 1 && S > 1)
    p1 = std::sqrt(static_cast<double>(S)) * scores[0].sum();
  else
    p1 = group_lasso_penalty(scores);
  return fit + config.lambda * p1 + config.beta * tv_penalty(factors, W);
}

namespace {

// Nonnegative least squares of the zero-delay windowed factors onto every subject.
std::vector<Matrix> regress_scores(const ObservationSet& data, const Matrix& factors, const ModelConfig& config) {
  const int f = static_cast<int>(factors.cols());
  const std::vector<DelayVector> zero(data.num_subjects(), DelayVector::zeros(f));
  const auto quadratics =
      assemble_score_quadratics(data, factors, zero, window_of(config, data.rows()), MaskPath::automatic,
                                config.execution);
  return estimate_scores(quadratics, 0.0, config.variant, config.inner_tol, config.max_inner_iters, {},
                         config.execution);
}

// Subject-averaged profile of every variable, observed entries only (n x p).
Matrix averaged_profiles(const ObservationSet& data) {
  Matrix sum = Matrix::Zero(data.rows(), data.cols());
  Matrix count = Matrix::Zero(data.rows(), data.cols());
  for (int s = 0; s < data.num_subjects(); ++s) {
    sum += data.masks[s].cwiseProduct(data.subjects[s]);
    count += data.masks[s];
  }
  return (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0);
}

}  // namespace

Initialization init_factors(const ObservationSet& data, const ModelConfig& config, InitStrategy strategy,
                            std::uint64_t seed) {
  const int n = data.rows();
  const int p = data.cols();
  const int f = config.f;
  const int n_F = config.factor_length(n);
  if (f < 1) throw std::invalid_argument("f must be positive");

  Matrix F = Matrix::Zero(n_F, f);
  if (strategy == InitStrategy::random) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < f; ++k)
      for (int r = 0; r < n_F; ++r) F(r, k) = unif(rng);
  } else {
    if (f > p) throw std::invalid_argument("cluster initialization needs f <= p");
    const Matrix all_profiles = averaged_profiles(data);
    // Silent variables would form a cluster of their own.
    const double largest = all_profiles.colwise().norm().maxCoeff();
    std::vector<int> active;
    for (int i = 0; i < p; ++i)
      if (all_profiles.col(i).norm() > 1e-12 * largest) active.push_back(i);
    if (static_cast<int>(active.size()) < f) throw std::invalid_argument("fewer active variables than factors");
    Matrix profiles(n, active.size());
    for (std::size_t a = 0; a < active.size(); ++a) profiles.col(a) = all_profiles.col(active[a]);
    const std::vector<int> label = average_linkage(normalize_columns(profiles), f);
    Matrix means = Matrix::Zero(n, f);
    std::vector<int> members(f, 0);
    for (Eigen::Index i = 0; i < profiles.cols(); ++i) {
      means.col(label[i]) += profiles.col(i);
      ++members[label[i]];
    }
    for (int k = 0; k < f; ++k) means.col(k) /= std::max(members[k], 1);

    // Order the columns by the time of their peak.
    std::vector<int> order(f);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Eigen::Index> peak(f);
    for (int k = 0; k < f; ++k) means.col(k).maxCoeff(&peak[k]);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return peak[a] < peak[b]; });
    for (int k = 0; k < f; ++k) F.col(k).segment(config.window_start, n) = means.col(order[k]).cwiseMax(0.0);

    // Columns at norm bound / sqrt(f) so that ||F||_F meets the bound.
    const double target = config.frobenius_bound / std::sqrt(static_cast<double>(f));
    for (int k = 0; k < f; ++k) {
      const double norm = F.col(k).norm();
      if (norm > 0.0) F.col(k) *= target / norm;
    }
  }
  F = project_factor_set(F, config.frobenius_bound);

  Initialization init;
  init.factors = F;
  init.scores = regress_scores(data, F, config);
  return init;
}

namespace {

// A column that collapsed to zero is reseeded with tiny uniform noise (and its
// score rows cleared) provided the Frobenius budget allows and the objective
// does not increase.
void reseed_dead_columns(Matrix& F, std::vector<Matrix>& scores, const std::vector<DelayVector>& delays,
                         const ObservationSet& data, const ModelConfig& config, const Matrix& W,
                         double& objective, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index k = 0; k < F.cols(); ++k) {
    if (F.col(k).any()) continue;
    const double room = config.frobenius_bound * config.frobenius_bound - F.squaredNorm();
    if (room <= 0.0) continue;
    Vector noise(F.rows());
    for (Eigen::Index r = 0; r < F.rows(); ++r) noise[r] = unif(rng);
    noise *= std::min(1e-6 * config.frobenius_bound, 0.5 * std::sqrt(room)) / noise.norm();

    Matrix F_new = F;
    F_new.col(k) = noise;
    std::vector<Matrix> scores_new = scores;
    for (auto& A : scores_new) A.row(k).setZero();
    const double candidate = opfa_objective(F_new, scores_new, delays, data, config, W);
    if (candidate <= objective) {
      F = std::move(F_new);
      scores = std::move(scores_new);
      objective = candidate;
    }
  }
}

}  // namespace

std::optional<std::vector<DelayVector>> best_refit_delays(const ObservationSet& data, const Matrix& factors,
                                                         const ModelConfig& config, const Window& window) {
  const int f = static_cast<int>(factors.cols());
  if (cone_size(f, config.d_max) > kRefitConeLimit) return std::nullopt;
  std::vector<DelayVector> cone;
  enumerate_cone(f, config.d_max, [&](const DelayVector& d) { cone.push_back(d); });
  const int S = data.num_subjects();
  std::vector<DelayVector> out(S);
#pragma omp parallel for schedule(dynamic) if (config.execution == Execution::parallel)
  for (int s = 0; s < S; ++s) {
    const bool masked = !(data.masks[s].array() == 1.0).all();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& d : cone) {
      const ScoreQuadratic q = masked ? assemble_score_quadratic(data.subjects[s], factors, d, data.masks[s], window)
                                      : assemble_score_quadratic(data.subjects[s], factors, d, window);
      const Matrix A = estimate_scores({q}, 0.0, Variant::opfa, config.inner_tol, config.max_inner_iters)[0];
      const double value = q.value(A);
      if (value < best) {
        best = value;
        out[s] = d;
      }
    }
  }
  return out;
}

CanonicalForm canonical_form(const std::vector<DelayVector>& delays, int d_max) {
  CanonicalForm best;
  if (delays.empty()) return best;
  const int f = delays.front().size();
  std::vector<int> order(f);
  std::iota(order.begin(), order.end(), 0);
  best.order = order;
  best.shifts.assign(f, 0);
  long best_total = std::numeric_limits<long>::max();
  do {
    std::vector<int> c(f);
    bool feasible = true;
    long total = 0;
    for (int j = 0; j < f && feasible; ++j) {
      int lowest = std::numeric_limits<int>::max(), highest = std::numeric_limits<int>::min();
      int gap = std::numeric_limits<int>::max();
      for (const auto& d : delays) {
        lowest = std::min(lowest, d[order[j]]);
        highest = std::max(highest, d[order[j]]);
        if (j > 0) gap = std::min(gap, d[order[j]] - d[order[j - 1]]);
      }
      c[j] = j == 0 ? lowest : std::min(lowest, c[j - 1] + gap);
      feasible = highest - c[j] <= d_max;
      for (const auto& d : delays) total += d[order[j]] - c[j];
    }
    if (feasible && total < best_total) {
      best_total = total;
      best.order = order;
      best.shifts = c;
    }
  } while (f <= 6 && std::next_permutation(order.begin(), order.end()));
  return best;
}

void canonicalize(OpfaFit& fit, const ObservationSet& data, const Matrix& W) {
  const CanonicalForm form = canonical_form(fit.delays, fit.config.d_max);
  const int f = static_cast<int>(fit.factors.cols());
  Matrix F(fit.factors.rows(), f);
  for (int j = 0; j < f; ++j) F.col(j) = circular_shift(fit.factors.col(form.order[j]), form.shifts[j]);
  std::vector<Matrix> scores = fit.scores;
  for (std::size_t s = 0; s < scores.size(); ++s)
    for (int j = 0; j < f; ++j) scores[s].row(j) = fit.scores[s].row(form.order[j]);
  std::vector<DelayVector> delays = fit.delays;
  for (auto& d : delays) {
    std::vector<int> v(f);
    for (int j = 0; j < f; ++j) v[j] = d[form.order[j]] - form.shifts[j];
    d = DelayVector(std::move(v));
  }
  if (fit.config.beta == 0.0) {
    // Entries no subject ever observes do not enter the objective.
    const int n_F = static_cast<int>(F.rows());
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_F, f, false);
    for (int s = 0; s < data.num_subjects(); ++s)
      for (int t = 0; t < data.rows(); ++t)
        for (int j = 0; j < f; ++j)
          if (data.masks[s].row(t).any()) seen(source_row(fit.config.window_start, t, delays[s][j], n_F), j) = true;
    F = seen.select(F, 0.0);
  }
  const double before = fit.final_objective();
  const double after = opfa_objective(F, scores, delays, data, fit.config, W);
  if (after <= before + 1e-12 * std::abs(before)) {
    fit.factors = std::move(F);
    fit.scores = std::move(scores);
    fit.delays = std::move(delays);
    if (!fit.objective_trace.empty()) fit.objective_trace.back() = after;
  }
}

OpfaFit fit_from(const ObservationSet& data, const ModelConfig& config, const Initialization& init) {
  data.validate();
  const int n = data.rows();
  config.validate(n);
  const int n_F = config.factor_length(n);
  const int S = data.num_subjects();
  const Window window = window_of(config, n);
  const Matrix W = first_difference(n_F);
  const int expected_scores = config.variant == Variant::opfa_c ? 1 : S;
  if (init.factors.rows() != n_F || init.factors.cols() != config.f)
    throw DimensionError("initial factors must be n_F x f");
  if (static_cast<int>(init.scores.size()) != expected_scores)
    throw DimensionError("initial scores do not match the variant");

  OpfaFit fit;
  fit.config = config;
  fit.config.n_F = n_F;
  fit.factors = project_factor_set(init.factors, config.frobenius_bound);
  fit.scores = init.scores;
  for (auto& A : fit.scores) A = A.cwiseMax(0.0);
  fit.delays.assign(S, DelayVector::zeros(config.f));

  double current = opfa_objective(fit.factors, fit.scores, fit.delays, data, config, W);
  if (!std::isfinite(current)) throw NumericalError("non-finite initial objective");
  fit.objective_trace.push_back(current);
  const double tol = std::max(config.outer_tol * current, std::numeric_limits<double>::min());
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const auto scores_then_factors = [&](std::vector<DelayVector> delays, const Matrix& F0,
                                       const std::vector<Matrix>& A0) {
    OpfaFit step;
    step.delays = std::move(delays);
    const auto score_quadratics =
        assemble_score_quadratics(data, F0, step.delays, window, MaskPath::automatic, config.execution);
    step.scores = estimate_scores(score_quadratics, config.lambda, config.variant, config.inner_tol,
                                  config.max_inner_iters, A0, config.execution);
    const QuadraticForm factor_quadratic = assemble_factor_quadratic(
        data, step.scores, step.delays, n_F, window, config.beta, W, MaskPath::automatic, config.execution);
    step.factors = estimate_factors(factor_quadratic, F0, config.frobenius_bound, config.inner_tol,
                                    config.max_inner_iters);
    return step;
  };

  for (int it = 0; it < config.max_outer_iters; ++it) {
    OpfaFit step = scores_then_factors(
        estimate_all_delays(data, fit.factors, fit.scores, config.d_max, window, config.execution), fit.factors,
        fit.scores);
    fit.delays = std::move(step.delays);
    fit.scores = std::move(step.scores);
    fit.factors = std::move(step.factors);

    double next = opfa_objective(fit.factors, fit.scores, fit.delays, data, config, W);
    reseed_dead_columns(fit.factors, fit.scores, fit.delays, data, config, W, next, rng);
    if (!std::isfinite(next)) throw NumericalError("non-finite objective");

    bool stalled = current - next < tol;
    if (stalled && config.variant == Variant::opfa) {
      // Joint (delay, score) move: the delay step is exact only for the
      // current scores, which may have adapted to wrong delays.
      const auto candidate_delays = best_refit_delays(data, fit.factors, config, window);
      if (candidate_delays && *candidate_delays != fit.delays) {
        OpfaFit trial = scores_then_factors(*candidate_delays, fit.factors, fit.scores);
        const double value = opfa_objective(trial.factors, trial.scores, trial.delays, data, config, W);
        if (value < next - tol) {
          fit.delays = std::move(trial.delays);
          fit.scores = std::move(trial.scores);
          fit.factors = std::move(trial.factors);
          next = value;
          stalled = false;
        }
      }
    }
    fit.objective_trace.push_back(next);
    fit.iterations = it + 1;
    current = next;
    if (stalled) {
      fit.converged = true;
      break;
    }
  }
  canonicalize(fit, data, W);
  return fit;
}

OpfaFit fit_opfa(const ObservationSet& data, const ModelConfig& config) {
  data.validate();
  config.validate(data.rows());
  const int R = config.restarts;
  std::vector<OpfaFit> fits(R);
  std::vector<std::exception_ptr> errors(R);

#pragma omp parallel for schedule(dynamic) if (config.execution == Execution::parallel && R > 1)
  for (int r = 0; r < R; ++r) {
    try {
      const bool cluster = r == 0 && config.f <= data.cols();
      const Initialization init = init_factors(data, config, cluster ? InitStrategy::cluster : InitStrategy::random,
                                               config.seed + static_cast<std::uint64_t>(r));
      ModelConfig run = config;
      run.seed = config.seed + static_cast<std::uint64_t>(r);
      fits[r] = fit_from(data, run, init);
      fits[r].config.seed = config.seed;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  int best = 0;
  for (int r = 1; r < R; ++r)
    if (fits[r].final_objective() < fits[best].final_objective()) best = r;
  return std::move(fits[best]);
}

}  // namespace opfa
