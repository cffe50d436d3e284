#include "opfa/synthetic.hpp"

#include "opfa/shift_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace opfa {

std::string to_string(Dictionary d) { return d == Dictionary::bump ? "bump" : "sigmoid_updown"; }

Dictionary dictionary_from_string(const std::string& s) {
  if (s == "bump") return Dictionary::bump;
  if (s == "sigmoid_updown") return Dictionary::sigmoid_updown;
  throw std::invalid_argument("unknown dictionary '" + s + "'");
}

void SyntheticConfig::validate() const {
  if (S < 1 || n < 2 || p < 1 || f < 1) throw std::invalid_argument("synthetic shapes must be positive (n >= 2)");
  if (d_max < 0 || d_max > n) throw std::invalid_argument("d_max must lie in [0, n]");
  const int nf = factor_length();
  if (nf < n + d_max) throw std::invalid_argument("n_F must be at least n + d_max");
  if (window_start < 0 || window_start + n > nf) throw std::invalid_argument("window must lie inside [0, n_F)");
  if (sigma_eps2 < 0 || sigma_d2 < 0) throw std::invalid_argument("variances must be nonnegative");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) throw std::invalid_argument("sparsity must lie in (0, 1]");
}

Matrix make_dictionary(Dictionary kind, int n_F, int f, int n, int window_start) {
  Matrix F = Matrix::Zero(n_F, f);
  const double nd = n;
  auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (int k = 0; k < f; ++k) {
    for (int r = 0; r < n_F; ++r) {
      const double u = r - window_start;  // time inside the window
      if (kind == Dictionary::bump) {
        const double center = nd * (k + 1) / (f + 2);
        const double width = nd / 10.0 * (1.0 + k);
        F(r, k) = std::exp(-0.5 * (u - center) * (u - center) / (width * width));
      } else {
        const double onset = nd * (0.1 + 0.4 * k / f);
        const double offset = onset + 0.35 * nd;
        const double tau = nd / 40.0;
        const double pulse = logistic((u - onset) / tau) * logistic((offset - u) / tau);
        F(r, k) = (k % 2 == 0) ? pulse : 1.0 - 0.8 * pulse;
      }
    }
    F.col(k) /= F.col(k).norm();
  }
  return F;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const int S = config.S, n = config.n, p = config.p, f = config.f;
  const int n_F = config.factor_length();
  const Window window{config.window_start, n};
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, std::sqrt(12.0 * config.sigma_d2 + 1.0));

  SyntheticDataset out;
  out.config = config;
  out.true_factors = make_dictionary(config.dictionary, n_F, f, n, config.window_start);

  for (int s = 0; s < S; ++s) {
    std::vector<int> d(f);
    for (int k = 0; k < f; ++k) d[k] = std::min(static_cast<int>(std::floor(unif(rng))), config.d_max);
    std::sort(d.begin(), d.end());
    out.true_delays.emplace_back(std::move(d));
  }

  // One support shared by every subject.
  const int groups = f * p;
  const int active = std::max(1, static_cast<int>(std::lround(config.sparsity * groups)));
  std::vector<int> order(groups);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix support = Matrix::Zero(f, p);
  for (int g = 0; g < active; ++g) support(order[g] % f, order[g] / f) = 1.0;

  for (int s = 0; s < S; ++s) {
    Matrix A = Matrix::Zero(f, p);
    for (int i = 0; i < p; ++i)
      for (int k = 0; k < f; ++k)
        if (support(k, i) != 0.0) A(k, i) = std::abs(gauss(rng));
    out.true_scores.push_back(std::move(A));
  }

  double energy = 0.0;
  for (int s = 0; s < S; ++s) {
    out.noiseless.push_back(predict_subject(out.true_factors, out.true_delays[s], out.true_scores[s], window));
    energy += out.noiseless.back().squaredNorm();
  }
  energy /= S;

  double variance = config.sigma_eps2;
  if (config.snr_db) variance = energy / (static_cast<double>(n) * p * std::pow(10.0, *config.snr_db / 10.0));
  out.noise_variance = variance;
  const double sigma = std::sqrt(variance);

  std::vector<Matrix> subjects;
  for (int s = 0; s < S; ++s) {
    Matrix X = out.noiseless[s];
    if (sigma > 0.0)
      for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) += sigma * gauss(rng);
    subjects.push_back(std::move(X));
  }
  out.data = ObservationSet::from_matrices(std::move(subjects));
  return out;
}

}  // namespace opfa
