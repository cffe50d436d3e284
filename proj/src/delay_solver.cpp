#include "opfa/delay_solver.hpp"

#include "opfa/shift_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace opfa {

namespace {

void check_shapes(const Matrix& X, const Matrix& factors, const Matrix& scores, const Window& window) {
  if (scores.rows() != factors.cols()) throw DimensionError("scores must have f rows");
  if (scores.cols() != X.cols()) throw DimensionError("scores must have p columns");
  if (X.rows() != window.length) throw DimensionError("observation rows must equal the window length");
  if (window.start < 0 || window.start + window.length > factors.rows())
    throw DimensionError("observation window does not fit the factor length");
}

void check_mask(const Matrix& X, const Matrix& mask) {
  if (mask.rows() != X.rows() || mask.cols() != X.cols()) throw DimensionError("mask shape mismatch");
}

// Shifted, windowed copy of factor column j.
Vector shifted_window_column(const Matrix& factors, int j, int d, const Window& window) {
  const int n_F = static_cast<int>(factors.rows());
  Vector w(window.length);
  for (int t = 0; t < window.length; ++t) w[t] = factors(source_row(window.start, t, d, n_F), j);
  return w;
}

}  // namespace

double delay_objective(const Matrix& X, const Matrix& factors, const Matrix& scores, const DelayVector& d,
                       const Window& window) {
  check_shapes(X, factors, scores, window);
  return (X - windowed_factors(factors, d, window) * scores).squaredNorm();
}

double delay_objective(const Matrix& X, const Matrix& factors, const Matrix& scores, const DelayVector& d,
                       const Matrix& mask, const Window& window) {
  check_shapes(X, factors, scores, window);
  check_mask(X, mask);
  return mask.cwiseProduct(X - windowed_factors(factors, d, window) * scores).squaredNorm();
}

bool tighten_to_cone(std::vector<int>& lo, std::vector<int>& hi) {
  const int f = static_cast<int>(lo.size());
  for (int j = 1; j < f; ++j) lo[j] = std::max(lo[j], lo[j - 1]);
  for (int j = f - 2; j >= 0; --j) hi[j] = std::min(hi[j], hi[j + 1]);
  for (int j = 0; j < f; ++j)
    if (lo[j] > hi[j]) return false;
  return true;
}

double masked_kron_min_eigenvalue(const Matrix& scores, const Matrix& mask) {
  if (mask.cols() != scores.cols()) throw DimensionError("mask must have p columns");
  double lmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < mask.rows(); ++t) {
    const Matrix G = scores * mask.row(t).transpose().asDiagonal() * scores.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
    lmin = std::min(lmin, eig.eigenvalues().minCoeff());
  }
  return std::isfinite(lmin) ? lmin : 0.0;
}

DelayLowerBound::DelayLowerBound(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max,
                                 const Window& window) {
  check_shapes(X, factors, scores, window);
  const int f = static_cast<int>(factors.cols());
  table_ = Matrix::Zero(d_max + 1, f);

  // Pseudoinverse through the eigendecomposition of A A' (f x f).
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scores * scores.transpose());
  const Vector& ev = eig.eigenvalues();
  const double top = f > 0 ? std::max(ev.maxCoeff(), 0.0) : 0.0;
  const double cutoff = 1e-10 * top;
  Vector inv = Vector::Zero(f);
  for (int k = 0; k < f; ++k)
    if (ev[k] > cutoff && ev[k] > 0.0) inv[k] = 1.0 / ev[k];
  const Matrix& V = eig.eigenvectors();
  const Matrix XAt = X * scores.transpose();
  const Matrix Y = XAt * V * inv.asDiagonal() * V.transpose();  // X A^+
  constant_ = (X - Y * scores).squaredNorm();

  const double lmin = f > 0 ? ev.minCoeff() : 0.0;
  curvature_ = (lmin > cutoff && lmin > 0.0) ? lmin * (1.0 - 1e-12) : 0.0;
  if (curvature_ == 0.0) return;
  for (int j = 0; j < f; ++j)
    for (int d = 0; d <= d_max; ++d)
      table_(d, j) = curvature_ * (Y.col(j) - shifted_window_column(factors, j, d, window)).squaredNorm();
}

DelayLowerBound::DelayLowerBound(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max,
                                 const Matrix& mask, const Window& window) {
  check_shapes(X, factors, scores, window);
  check_mask(X, mask);
  const int f = static_cast<int>(factors.cols());
  table_ = Matrix::Zero(d_max + 1, f);

  const Matrix xm = mask.cwiseProduct(X);
  constant_ = xm.squaredNorm();
  const Matrix C = xm * scores.transpose();  // sum_i Q_{s,i}' as an n x f matrix

  const double lmin = masked_kron_min_eigenvalue(scores, mask);
  const double scale = (scores * scores.transpose()).norm();
  curvature_ = std::max(0.0, lmin - 1e-12 * scale);
  for (int j = 0; j < f; ++j) {
    for (int d = 0; d <= d_max; ++d) {
      const Vector w = shifted_window_column(factors, j, d, window);
      table_(d, j) = curvature_ * w.squaredNorm() - 2.0 * C.col(j).dot(w);
    }
  }
}

double DelayLowerBound::operator()(const std::vector<int>& lo, const std::vector<int>& hi) const {
  double total = constant_;
  for (Eigen::Index j = 0; j < table_.cols(); ++j)
    total += table_.col(j).segment(lo[j], hi[j] - lo[j] + 1).minCoeff();
  return total;
}

double delay_lower_bound(const BBNode& node, const Matrix& X, const Matrix& factors, const Matrix& scores,
                         int d_max, const Window& window) {
  return DelayLowerBound(X, factors, scores, d_max, window)(node.lo, node.hi);
}

double delay_lower_bound(const BBNode& node, const Matrix& X, const Matrix& factors, const Matrix& scores,
                         int d_max, const Matrix& mask, const Window& window) {
  return DelayLowerBound(X, factors, scores, d_max, mask, window)(node.lo, node.hi);
}

std::int64_t cone_size(int f, int d_max) {
  if (f <= 0) return 1;
  // C(d_max + f, f) = prod_{i=1..f} (d_max + i) / i, exact at every step.
  std::int64_t result = 1;
  const int k = std::min(f, d_max);
  const int m = std::max(f, d_max);
  for (int i = 1; i <= k; ++i) {
    if (result > std::numeric_limits<std::int64_t>::max() / (m + i)) return std::numeric_limits<std::int64_t>::max();
    result = result * (m + i) / i;
  }
  return result;
}

void enumerate_cone(int f, int d_max, const std::function<void(const DelayVector&)>& visit) {
  DelayVector d = DelayVector::zeros(f);
  if (f == 0) {
    visit(d);
    return;
  }
  // Odometer over nondecreasing sequences in lexicographic order.
  while (true) {
    visit(d);
    int j = f - 1;
    while (j >= 0 && d[j] == d_max) --j;
    if (j < 0) return;
    ++d[j];
    for (int k = j + 1; k < f; ++k) d[k] = d[j];
  }
}

namespace {

template <class Objective>
DelaySearchResult branch_and_bound(int f, int d_max, const Objective& objective, const DelayLowerBound& bound,
                                   double scale, const BranchAndBoundOptions& options) {
  DelaySearchResult result;
  result.objective = std::numeric_limits<double>::infinity();

  auto consider = [&](const DelayVector& d, double g) {
    if (g < result.objective || (g == result.objective && d < result.delays)) {
      result.objective = g;
      result.delays = d;
    }
  };
  auto evaluate = [&](const DelayVector& d) {
    ++result.evaluations;
    return objective(d);
  };

  struct Entry {
    double lb;
    int depth;
    int id;
    std::size_t slot;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.lb != b.lb) return a.lb > b.lb;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  std::vector<BBNode> pool;  // open nodes, indexed by Entry::slot
  int next_id = 0;

  auto make_node = [&](std::vector<int> lo, std::vector<int> hi, int depth, int parent,
                       const BBNode* parent_node) -> bool {
    if (!tighten_to_cone(lo, hi)) return false;
    BBNode node;
    node.lo = std::move(lo);
    node.hi = std::move(hi);
    node.depth = depth;
    node.parent = parent;
    node.id = next_id++;
    node.lower_bound = bound(node.lo, node.hi);
    // The tightened lower corner is already nondecreasing, so it is a cone point.
    node.witness = DelayVector(node.lo);
    if (parent_node && parent_node->witness == node.witness)
      node.upper_bound = parent_node->upper_bound;
    else
      node.upper_bound = evaluate(node.witness);
    consider(node.witness, node.upper_bound);
    ++result.nodes;
    if (options.record_nodes) result.trace.push_back(node);
    const bool singleton = node.lo == node.hi;
    if (!singleton) {
      open.push({node.lower_bound, node.depth, node.id, pool.size()});
      pool.push_back(std::move(node));
    }
    return true;
  };

  make_node(std::vector<int>(f, 0), std::vector<int>(f, d_max), 0, -1, nullptr);

  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    const double slack = 1e-9 * std::abs(result.objective) + 1e-12 * scale;
    if (top.lb > result.objective + slack) break;  // every remaining node is at least as bad
    const BBNode node = pool[top.slot];

    int axis = 0;
    for (int j = 1; j < f; ++j)
      if (node.hi[j] - node.lo[j] > node.hi[axis] - node.lo[axis]) axis = j;
    const int gamma = node.lo[axis] + (node.hi[axis] - node.lo[axis]) / 2;

    std::vector<int> left_hi = node.hi;
    left_hi[axis] = gamma;
    std::vector<int> right_lo = node.lo;
    right_lo[axis] = gamma + 1;
    make_node(node.lo, left_hi, node.depth + 1, node.id, &node);
    make_node(right_lo, node.hi, node.depth + 1, node.id, &node);
  }
  return result;
}

template <class Objective>
DelaySearchResult brute_force(int f, int d_max, const Objective& objective) {
  if (cone_size(f, d_max) > kBruteForceLimit)
    throw std::invalid_argument("cone has " + std::to_string(cone_size(f, d_max)) +
                                " points, above the enumeration limit");
  DelaySearchResult result;
  result.objective = std::numeric_limits<double>::infinity();
  enumerate_cone(f, d_max, [&](const DelayVector& d) {
    ++result.evaluations;
    const double g = objective(d);
    if (g < result.objective) {  // strict: the first (lexicographically smallest) tie wins
      result.objective = g;
      result.delays = d;
    }
  });
  return result;
}

void check_d_max(int d_max) {
  if (d_max < 0) throw std::invalid_argument("d_max must be nonnegative");
}

}  // namespace

DelaySearchResult estimate_delays_bb(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max,
                                     const Window& window, BranchAndBoundOptions options) {
  check_d_max(d_max);
  const DelayLowerBound bound(X, factors, scores, d_max, window);
  auto objective = [&](const DelayVector& d) { return delay_objective(X, factors, scores, d, window); };
  return branch_and_bound(static_cast<int>(factors.cols()), d_max, objective, bound, X.squaredNorm(), options);
}

DelaySearchResult estimate_delays_bb(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max,
                                     const Matrix& mask, const Window& window, BranchAndBoundOptions options) {
  check_d_max(d_max);
  const DelayLowerBound bound(X, factors, scores, d_max, mask, window);
  auto objective = [&](const DelayVector& d) { return delay_objective(X, factors, scores, d, mask, window); };
  return branch_and_bound(static_cast<int>(factors.cols()), d_max, objective, bound,
                          mask.cwiseProduct(X).squaredNorm(), options);
}

DelaySearchResult estimate_delays_bruteforce(const Matrix& X, const Matrix& factors, const Matrix& scores,
                                             int d_max, const Window& window) {
  check_d_max(d_max);
  check_shapes(X, factors, scores, window);
  auto objective = [&](const DelayVector& d) { return delay_objective(X, factors, scores, d, window); };
  return brute_force(static_cast<int>(factors.cols()), d_max, objective);
}

DelaySearchResult estimate_delays_bruteforce(const Matrix& X, const Matrix& factors, const Matrix& scores,
                                             int d_max, const Matrix& mask, const Window& window) {
  check_d_max(d_max);
  check_shapes(X, factors, scores, window);
  check_mask(X, mask);
  auto objective = [&](const DelayVector& d) { return delay_objective(X, factors, scores, d, mask, window); };
  return brute_force(static_cast<int>(factors.cols()), d_max, objective);
}

std::vector<DelayVector> estimate_all_delays(const ObservationSet& data, const Matrix& factors,
                                             const std::vector<Matrix>& scores, int d_max, const Window& window,
                                             Execution exec) {
  const int S = data.num_subjects();
  check_d_max(d_max);
  if (scores.size() != 1 && static_cast<int>(scores.size()) != S)
    throw DimensionError("scores must hold S matrices or a single shared matrix");
  for (int s = 0; s < S; ++s) {
    check_shapes(data.subjects[s], factors, scores.size() == 1 ? scores[0] : scores[s], window);
    check_mask(data.subjects[s], data.masks[s]);
  }
  std::vector<DelayVector> out(S);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int s = 0; s < S; ++s) {
    const Matrix& A = scores.size() == 1 ? scores[0] : scores[s];
    const bool observed = (data.masks[s].array() == 1.0).all();
    out[s] = observed ? estimate_delays_bb(data.subjects[s], factors, A, d_max, window).delays
                      : estimate_delays_bb(data.subjects[s], factors, A, d_max, data.masks[s], window).delays;
  }
  return out;
}

}  // namespace opfa
