#pragma once

#include "opfa/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace opfa {

struct CvConfig {
  double holdout_fraction = 0.1;
  std::vector<double> lambda_grid{0.0};
  std::vector<double> beta_grid{0.0};
  std::vector<int> f_values{1, 2, 3};
  std::uint64_t seed = 0;
  /// Warm-start successive (lambda, beta) fits at the same f. Ignored when the
  /// grid runs in parallel.
  bool warm_start = true;
  /// CV errors within tie_tolerance * (mean held-out energy) of the minimum
  /// count as tied; 0 gives the plain argmin.
  double tie_tolerance = 1e-6;

  void validate() const;
};

struct CvRow {
  int f = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double cv_error = 0.0;
  double train_error = 0.0;
};

/// Index of the selected row: among rows whose cv_error is within
/// `tolerance` of the minimum, the smallest f, then the largest lambda, then
/// the largest beta, then the earliest row.
std::size_t select_row(const std::vector<CvRow>& rows, double tolerance);

struct CvTable {
  std::vector<CvRow> rows;
  std::size_t selected = 0;

  const CvRow& best() const { return rows.at(selected); }
};

/// Per subject, exactly round(fraction * n * p) entries are held out (0); the
/// rest are 1. Sampling is uniform without replacement, redrawn until no row
/// or column of any subject is entirely held out.
std::vector<Matrix> holdout_masks(int n, int p, int S, double fraction, std::uint64_t seed);

/// Result of one grid point, kept for inspection.
struct CvFit {
  CvRow row;
  OpfaFit fit;
};

/// Entry-holdout cross-validation over (f, lambda, beta). Held-out entries
/// are zeroed and masked out of the training data. cv_error is
/// (1/S) sum_s ||[X_s - Xhat_s]_{test}||^2 and train_error the same mean over
/// the training entries.
CvTable cross_validate(const ObservationSet& data, const ModelConfig& base, const CvConfig& cv,
                       std::vector<CvFit>* fits = nullptr);

/// Writes cv_table.csv (header f,lambda,beta,cv_error,train_error).
void write_cv_table(const CvTable& table, const std::filesystem::path& path);

}  // namespace opfa
