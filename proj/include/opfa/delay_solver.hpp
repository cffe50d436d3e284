#pragma once

#include "opfa/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace opfa {

/// ||[X - window(M(F,d)) A]_mask||_F^2 (unmasked when no mask is given).
double delay_objective(const Matrix& X, const Matrix& factors, const Matrix& scores, const DelayVector& d,
                       const Window& window);
double delay_objective(const Matrix& X, const Matrix& factors, const Matrix& scores, const DelayVector& d,
                       const Matrix& mask, const Window& window);

/// A box [lo, hi] of the delay space, searched over its intersection with
/// the order-preserving cone.
struct BBNode {
  std::vector<int> lo;
  std::vector<int> hi;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  DelayVector witness;
  int depth = 0;
  int id = 0;
  int parent = -1;
};

/// Shrinks a box to the smallest box holding the same cone points
/// (running max of lo from the left, running min of hi from the right).
/// Returns false when the intersection with the cone is empty.
bool tighten_to_cone(std::vector<int>& lo, std::vector<int>& hi);

/// Relaxation bound for one subject. Precomputes, per factor column j and
/// shift value, the decoupled column cost; a box bound is then a sum of
/// per-column range minima plus a constant.
///
/// Complete data: lambda_min(A A') * ||X A^+ - W(d)||^2 + ||X (I - A^+ A)||^2.
/// Missing data: lambda_min(sum_i A_i A_i' (x) diag(w_i)) * ||W(d)||^2
///               - 2 <(w o X) A', W(d)> + ||[X]_w||^2.
/// W(d) is the windowed shifted factor matrix; both bounds decouple over
/// its columns.
class DelayLowerBound {
 public:
  DelayLowerBound(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max, const Window& window);
  DelayLowerBound(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max, const Matrix& mask,
                  const Window& window);

  double operator()(const std::vector<int>& lo, const std::vector<int>& hi) const;

  /// Smallest-eigenvalue factor used by the bound.
  double curvature() const { return curvature_; }
  double constant() const { return constant_; }
  /// cost(j, d) of the decoupled column term.
  double column_cost(int j, int d) const { return table_(d, j); }

 private:
  Matrix table_;  // (d_max + 1) x f
  double curvature_ = 0.0;
  double constant_ = 0.0;
};

/// Convenience wrapper: the bound for a single node.
double delay_lower_bound(const BBNode& node, const Matrix& X, const Matrix& factors, const Matrix& scores,
                         int d_max, const Window& window);
double delay_lower_bound(const BBNode& node, const Matrix& X, const Matrix& factors, const Matrix& scores,
                         int d_max, const Matrix& mask, const Window& window);

/// Smallest eigenvalue of sum_i A_i A_i' (x) diag(w_i), computed through its
/// block structure: the Kronecker sum is block-diagonal over time points with
/// f x f blocks A diag(mask row t) A'.
double masked_kron_min_eigenvalue(const Matrix& scores, const Matrix& mask);

struct DelaySearchResult {
  DelayVector delays;
  double objective = 0.0;
  std::int64_t evaluations = 0;  ///< full objective evaluations
  int nodes = 0;                 ///< nodes bounded (root included)
  std::vector<BBNode> trace;     ///< filled when tracing is requested
};

struct BranchAndBoundOptions {
  bool record_nodes = false;
};

/// Exact minimiser of delay_objective over the order-preserving cone with
/// entries in [0, d_max]: best-first branch and bound. Among tied minima the
/// lexicographically smallest delay vector is returned.
DelaySearchResult estimate_delays_bb(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max,
                                     const Window& window, BranchAndBoundOptions options = {});
DelaySearchResult estimate_delays_bb(const Matrix& X, const Matrix& factors, const Matrix& scores, int d_max,
                                     const Matrix& mask, const Window& window, BranchAndBoundOptions options = {});

/// Number of points in the cone: C(d_max + f, f).
std::int64_t cone_size(int f, int d_max);

/// Visits every cone point in lexicographic order.
void enumerate_cone(int f, int d_max, const std::function<void(const DelayVector&)>& visit);

inline constexpr std::int64_t kBruteForceLimit = 1'000'000;

/// Exhaustive search; ties go to the lexicographically smallest vector.
/// Throws std::invalid_argument when the cone has more than kBruteForceLimit points.
DelaySearchResult estimate_delays_bruteforce(const Matrix& X, const Matrix& factors, const Matrix& scores,
                                             int d_max, const Window& window);
DelaySearchResult estimate_delays_bruteforce(const Matrix& X, const Matrix& factors, const Matrix& scores,
                                             int d_max, const Matrix& mask, const Window& window);

/// Runs the branch and bound independently for every subject. Fully observed
/// subjects use the complete-data bound. `scores` holds S matrices or one
/// shared matrix.
std::vector<DelayVector> estimate_all_delays(const ObservationSet& data, const Matrix& factors,
                                             const std::vector<Matrix>& scores, int d_max, const Window& window,
                                             Execution exec = Execution::serial);

}  // namespace opfa
