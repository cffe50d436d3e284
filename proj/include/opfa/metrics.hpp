#pragma once

#include "opfa/synthetic.hpp"
#include "opfa/types.hpp"

#include <vector>

namespace opfa {

/// (1/S) sum_s ||D_s - Dhat_s||_F^2 between the noiseless truth and the fitted reconstruction.
double mse(const SyntheticDataset& truth, const OpfaFit& fit);

/// Same quantity on explicit reconstructions.
double mse(const std::vector<Matrix>& truth, const std::vector<Matrix>& estimate);

/// Reconstructions window(M(F, d_s)) A_s of a fit, one per subject.
std::vector<Matrix> reconstruct(const OpfaFit& fit, int S, int n);

/// 1 - mean column cosine similarity, after matching estimated to true
/// columns by the permutation (all f! of them, f <= 6) of largest total cosine.
/// A zero column throws unless `zero_as_orthogonal`, which scores it as cosine 0.
double dtf(const Matrix& true_factors, const Matrix& estimated, bool zero_as_orthogonal = false);

/// Estimated column matched to each true column under the best permutation.
std::vector<int> best_column_matching(const Matrix& true_factors, const Matrix& estimated,
                                      bool zero_as_orthogonal = false);

/// 10 log10( mean_s ||D_s||^2 / (n p sigma^2) ); +infinity when sigma^2 == 0.
double snr_db(const SyntheticDataset& dataset);

/// (d_s[factor] + t_I) mod n_F - window_start, per subject.
std::vector<double> absolute_onset_times(const std::vector<DelayVector>& delays, int t_I, int factor, int n_F,
                                         int window_start);

}  // namespace opfa
