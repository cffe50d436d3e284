#include "opfa/metrics.hpp"

#include "opfa/shift_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace opfa {

double mse(const std::vector<Matrix>& truth, const std::vector<Matrix>& estimate) {
  if (truth.size() != estimate.size() || truth.empty()) throw DimensionError("mse needs matching nonempty lists");
  double total = 0.0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (truth[s].rows() != estimate[s].rows() || truth[s].cols() != estimate[s].cols())
      throw DimensionError("mse: subject " + std::to_string(s) + " shape mismatch");
    total += (truth[s] - estimate[s]).squaredNorm();
  }
  return total / static_cast<double>(truth.size());
}

std::vector<Matrix> reconstruct(const OpfaFit& fit, int S, int n) {
  if (static_cast<int>(fit.delays.size()) != S) throw DimensionError("fit has a different subject count");
  const Window window{fit.config.window_start, n};
  std::vector<Matrix> out;
  for (int s = 0; s < S; ++s) out.push_back(predict_subject(fit.factors, fit.delays[s], fit.scores_for(s), window));
  return out;
}

double mse(const SyntheticDataset& truth, const OpfaFit& fit) {
  return mse(truth.noiseless, reconstruct(fit, truth.config.S, truth.config.n));
}

std::vector<int> best_column_matching(const Matrix& true_factors, const Matrix& estimated, bool zero_as_orthogonal) {
  if (true_factors.rows() != estimated.rows() || true_factors.cols() != estimated.cols())
    throw DimensionError("factor matrices must share shape");
  const int f = static_cast<int>(true_factors.cols());
  if (f > 6) throw std::invalid_argument("permutation matching supports at most 6 factors");
  Matrix cosine(f, f);
  for (int a = 0; a < f; ++a) {
    const double na = true_factors.col(a).norm();
    if (na == 0.0) throw std::invalid_argument("true factor column " + std::to_string(a) + " is zero");
    for (int b = 0; b < f; ++b) {
      const double nb = estimated.col(b).norm();
      if (nb == 0.0 && !zero_as_orthogonal)
        throw std::invalid_argument("estimated factor column " + std::to_string(b) + " is zero");
      cosine(a, b) = nb == 0.0 ? 0.0 : true_factors.col(a).dot(estimated.col(b)) / (na * nb);
    }
  }
  std::vector<int> perm(f), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_total = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int a = 0; a < f; ++a) total += cosine(a, perm[a]);
    if (total > best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double dtf(const Matrix& true_factors, const Matrix& estimated, bool zero_as_orthogonal) {
  const std::vector<int> match = best_column_matching(true_factors, estimated, zero_as_orthogonal);
  const int f = static_cast<int>(match.size());
  double total = 0.0;
  for (int a = 0; a < f; ++a) {
    const auto t = true_factors.col(a);
    const auto e = estimated.col(match[a]);
    if (e.norm() > 0.0) total += t.dot(e) / (t.norm() * e.norm());
  }
  return 1.0 - total / f;
}

double snr_db(const SyntheticDataset& dataset) {
  if (!(dataset.noise_variance > 0.0)) return std::numeric_limits<double>::infinity();
  double energy = 0.0;
  for (const auto& d : dataset.noiseless) energy += d.squaredNorm();
  energy /= static_cast<double>(dataset.noiseless.size());
  const double np = static_cast<double>(dataset.config.n) * dataset.config.p;
  return 10.0 * std::log10(energy / (np * dataset.noise_variance));
}

std::vector<double> absolute_onset_times(const std::vector<DelayVector>& delays, int t_I, int factor, int n_F,
                                         int window_start) {
  if (n_F <= 0) throw std::invalid_argument("n_F must be positive");
  std::vector<double> out;
  out.reserve(delays.size());
  for (const auto& d : delays) {
    if (factor < 0 || factor >= d.size()) throw std::invalid_argument("factor index out of range");
    int m = (d[factor] + t_I) % n_F;
    if (m < 0) m += n_F;
    out.push_back(static_cast<double>(m - window_start));
  }
  return out;
}

}  // namespace opfa
