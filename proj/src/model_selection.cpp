#include "opfa/model_selection.hpp"

#include "opfa/data_model.hpp"
#include "opfa/driver.hpp"
#include "opfa/shift_model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>

namespace opfa {

void CvConfig::validate() const {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw std::invalid_argument("holdout_fraction must lie in (0, 1)");
  if (lambda_grid.empty() || beta_grid.empty() || f_values.empty())
    throw std::invalid_argument("cross-validation grids must be nonempty");
  for (double v : lambda_grid)
    if (v < 0) throw std::invalid_argument("lambda grid values must be nonnegative");
  for (double v : beta_grid)
    if (v < 0) throw std::invalid_argument("beta grid values must be nonnegative");
  for (int v : f_values)
    if (v < 1) throw std::invalid_argument("f values must be positive");
  if (!(tie_tolerance >= 0.0)) throw std::invalid_argument("tie_tolerance must be nonnegative");
}

std::vector<Matrix> holdout_masks(int n, int p, int S, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("holdout fraction must lie in (0, 1)");
  const int total = n * p;
  const int held = static_cast<int>(std::lround(fraction * total));
  std::mt19937_64 rng(seed);
  std::vector<int> index(total);
  std::vector<Matrix> masks;
  masks.reserve(S);
  constexpr int kAttempts = 1000;
  for (int s = 0; s < S; ++s) {
    bool ok = false;
    Matrix mask;
    for (int attempt = 0; attempt < kAttempts && !ok; ++attempt) {
      std::iota(index.begin(), index.end(), 0);
      std::shuffle(index.begin(), index.end(), rng);
      mask = Matrix::Ones(n, p);
      for (int k = 0; k < held; ++k) mask(index[k] % n, index[k] / n) = 0.0;
      ok = (mask.rowwise().sum().array() > 0.0).all() && (mask.colwise().sum().array() > 0.0).all();
    }
    if (!ok)
      throw std::invalid_argument("holdout fraction too large: cannot keep an observed entry in every row and column");
    masks.push_back(std::move(mask));
  }
  return masks;
}

std::size_t select_row(const std::vector<CvRow>& rows, double tolerance) {
  if (rows.empty()) throw std::invalid_argument("empty cross-validation table");
  double lowest = rows[0].cv_error;
  for (const auto& r : rows) lowest = std::min(lowest, r.cv_error);
  std::size_t best = rows.size();
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (rows[g].cv_error > lowest + tolerance) continue;
    if (best == rows.size()) {
      best = g;
      continue;
    }
    const CvRow& a = rows[g];
    const CvRow& b = rows[best];
    if (a.f != b.f ? a.f < b.f : a.lambda != b.lambda ? a.lambda > b.lambda : a.beta > b.beta) best = g;
  }
  return best;
}

namespace {

double masked_error(const ObservationSet& data, const OpfaFit& fit, const std::vector<Matrix>& masks,
                    const Window& window) {
  double total = 0.0;
  for (int s = 0; s < data.num_subjects(); ++s) {
    const Matrix residual = data.subjects[s] - predict_subject(fit.factors, fit.delays[s], fit.scores_for(s), window);
    total += masks[s].cwiseProduct(residual).squaredNorm();
  }
  return total / data.num_subjects();
}

}  // namespace

CvTable cross_validate(const ObservationSet& data, const ModelConfig& base, const CvConfig& cv,
                       std::vector<CvFit>* fits) {
  data.validate();
  cv.validate();
  const int n = data.rows();
  const int S = data.num_subjects();
  const std::vector<Matrix> keep = holdout_masks(n, data.cols(), S, cv.holdout_fraction, cv.seed);

  ObservationSet train = data;
  std::vector<Matrix> train_masks(S), test_masks(S);
  for (int s = 0; s < S; ++s) {
    train_masks[s] = data.masks[s].cwiseProduct(keep[s]);
    test_masks[s] = data.masks[s].cwiseProduct((1.0 - keep[s].array()).matrix());
    train.masks[s] = train_masks[s];
    // Held-out values never reach the solver.
    train.subjects[s] = data.subjects[s].cwiseProduct(train_masks[s]);
  }

  struct Point {
    int f;
    double lambda;
    double beta;
  };
  std::vector<Point> grid;
  for (int f : cv.f_values)
    for (double lambda : cv.lambda_grid)
      for (double beta : cv.beta_grid) grid.push_back({f, lambda, beta});

  const auto config_for = [&](const Point& pt) {
    ModelConfig c = base;
    c.f = pt.f;
    c.lambda = pt.lambda;
    c.beta = pt.beta;
    c.validate(n);
    return c;
  };
  for (const auto& pt : grid) config_for(pt);

  const Window window = window_of(base, n);
  std::vector<CvFit> results(grid.size());
  auto record = [&](std::size_t g, OpfaFit fit) {
    results[g].row = {grid[g].f, grid[g].lambda, grid[g].beta, masked_error(data, fit, test_masks, window),
                      masked_error(data, fit, train_masks, window)};
    results[g].fit = std::move(fit);
  };

  const bool parallel = base.execution == Execution::parallel && !cv.warm_start;
  if (parallel) {
    std::vector<std::exception_ptr> errors(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t g = 0; g < grid.size(); ++g) {
      try {
        record(g, fit_opfa(train, config_for(grid[g])));
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const ModelConfig config = config_for(grid[g]);
      const bool warm = cv.warm_start && g > 0 && grid[g - 1].f == grid[g].f;
      if (warm) {
        Initialization init{results[g - 1].fit.factors, results[g - 1].fit.scores};
        record(g, fit_from(train, config, init));
      } else {
        record(g, fit_opfa(train, config));
      }
    }
  }

  CvTable table;
  for (const auto& r : results) table.rows.push_back(r.row);
  double held_out_energy = 0.0;
  for (int s = 0; s < S; ++s) held_out_energy += test_masks[s].cwiseProduct(data.subjects[s]).squaredNorm();
  held_out_energy /= S;
  table.selected = select_row(table.rows, cv.tie_tolerance * held_out_energy);
  if (fits) *fits = std::move(results);
  return table;
}

void write_cv_table(const CvTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "f,lambda,beta,cv_error,train_error\n";
  for (const auto& r : table.rows)
    out << r.f << ',' << format_number(r.lambda) << ',' << format_number(r.beta) << ','
        << format_number(r.cv_error) << ',' << format_number(r.train_error) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace opfa
