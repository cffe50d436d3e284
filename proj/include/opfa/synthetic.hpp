#pragma once

#include "opfa/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace opfa {

enum class Dictionary { bump, sigmoid_updown };

std::string to_string(Dictionary d);
Dictionary dictionary_from_string(const std::string& s);

struct SyntheticConfig {
  int S = 10;
  int n = 20;
  int p = 100;
  int f = 2;
  int d_max = 8;
  int n_F = 0;  ///< 0 means n + d_max
  int window_start = 0;
  double sigma_eps2 = 0.0;  ///< noise variance
  double sigma_d2 = 0.0;    ///< delay variance
  /// When set, the noise variance is derived from the realised signal
  /// energy so that snr_db(dataset) equals this value; sigma_eps2 is ignored.
  std::optional<double> snr_db;
  double sparsity = 0.5;  ///< fraction of nonzero (factor, variable) groups
  Dictionary dictionary = Dictionary::bump;
  std::uint64_t seed = 0;

  int factor_length() const { return n_F > 0 ? n_F : n + d_max; }
  void validate() const;
};

struct SyntheticDataset {
  ObservationSet data;
  Matrix true_factors;  ///< n_F x f, unit-norm columns
  std::vector<Matrix> true_scores;
  std::vector<DelayVector> true_delays;
  std::vector<Matrix> noiseless;  ///< window(M(F, d_s)) A_s
  SyntheticConfig config;
  double noise_variance = 0.0;  ///< the variance actually used
};

/// Smooth nonnegative factor shapes sampled on n_F points, unit-norm columns.
/// `bump`: Gaussian bumps at staggered centers inside the window, column k
/// of width (k + 1) n / 10 so that no column is a shift of another.
/// `sigmoid_updown`: even columns are smoothed up-then-down pulses, odd
/// columns a constant baseline with a smoothed dip.
Matrix make_dictionary(Dictionary kind, int n_F, int f, int n, int window_start);

/// Delays: sort(floor(u)) per subject with u_j ~ U(0, sqrt(12 sigma_d2 + 1)),
/// clipped to d_max. Scores: one shared support of round(sparsity f p)
/// groups; nonzero entries |N(0,1)|. X_s = window(M(F, d_s)) A_s + noise.
SyntheticDataset generate_synthetic(const SyntheticConfig& config);

}  // namespace opfa
