#pragma once

#include "opfa/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace opfa {

/// Full penalized objective:
///   sum_s ||[X_s - window(M(F,d_s)) A_s]_{mask_s}||^2 + lambda P1(A) + beta P2(F).
/// A single score matrix is treated as shared by all subjects (OPFA-C), whose
/// group penalty is sqrt(S) * sum(A). Throws NumericalError naming the violated
/// constraint when an iterate is infeasible.
double opfa_objective(const Matrix& factors, const std::vector<Matrix>& scores,
                      const std::vector<DelayVector>& delays, const ObservationSet& data,
                      const ModelConfig& config, const Matrix& W);

/// Data-fit term alone (no penalties, no feasibility checks).
double residual_energy(const Matrix& factors, const std::vector<Matrix>& scores,
                       const std::vector<DelayVector>& delays, const ObservationSet& data, const Window& window);

enum class InitStrategy { random, cluster };

struct Initialization {
  Matrix factors;
  std::vector<Matrix> scores;  ///< S matrices, or one under OPFA-C
};

/// Initial factors and scores. `random` draws uniform(0,1) entries; `cluster`
/// uses average-linkage clustering of the unit-normalized subject-averaged
/// profiles of the variables with nonzero profiles, cut at f clusters, and embeds the cluster
/// mean profiles in the observation window. Either way the factors are
/// projected into the feasible set and the scores are the nonnegative
/// least-squares regression of the factors (zero delays) onto each subject.
Initialization init_factors(const ObservationSet& data, const ModelConfig& config, InitStrategy strategy,
                            std::uint64_t seed);

/// Cone size above which the joint delay/score refit is skipped.
inline constexpr std::int64_t kRefitConeLimit = 5000;

/// For each subject, the cone point whose unpenalized nonnegative score refit
/// leaves the smallest residual (ties to the lexicographically smallest).
/// Empty when the cone exceeds kRefitConeLimit.
std::optional<std::vector<DelayVector>> best_refit_delays(const ObservationSet& data, const Matrix& factors,
                                                         const ModelConfig& config, const Window& window);

/// Relabeling factors by a permutation `order` and shifting factor j
/// circularly by c_j (its delays by -c_j) leaves every reconstruction
/// unchanged. The canonical form is the (order, shifts) pair with the
/// smallest total delay whose delays stay in the cone; ties keep the earliest
/// order (identity first). Orders are searched only when f <= 6.
struct CanonicalForm {
  std::vector<int> order;
  std::vector<int> shifts;
};

CanonicalForm canonical_form(const std::vector<DelayVector>& delays, int d_max);

/// Moves a fit to its canonical form and, when beta == 0,
/// zeroes factor entries that no subject observes. Applied only when the
/// objective does not increase (the squared-TV term can change at the wrap);
/// the last trace entry then holds the new objective.
void canonicalize(OpfaFit& fit, const ObservationSet& data, const Matrix& W);

/// Block coordinate descent from a given starting point. Loop order per
/// sweep: delays, scores, factors. When a sweep stalls, OPFA fits try the
/// delays of best_refit_delays followed by a score and factor update, kept
/// only if the objective drops by more than the stopping tolerance. `objective_trace[0]` is the starting
/// objective with zero delays. The result is canonicalized.
OpfaFit fit_from(const ObservationSet& data, const ModelConfig& config, const Initialization& init);

/// Runs config.restarts descents (first from the clustering initialization,
/// the rest random with seeds seed + r) and keeps the smallest final objective.
OpfaFit fit_opfa(const ObservationSet& data, const ModelConfig& config);

/// Observation window implied by a config and series length.
inline Window window_of(const ModelConfig& config, int n) { return Window{config.window_start, n}; }

}  // namespace opfa
