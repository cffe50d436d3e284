#include "opfa/quadratic.hpp"

#include "opfa/shift_model.hpp"

#include <string>

namespace opfa {

double ScoreQuadratic::value(const Matrix& scores) const {
  double total = c;
  for (int i = 0; i < variables(); ++i) {
    const auto a = scores.col(i);
    total += a.dot(blocks[i] * a) - 2.0 * rhs.col(i).dot(a);
  }
  return total;
}

Matrix ScoreQuadratic::gradient(const Matrix& scores) const {
  Matrix g(factors(), variables());
  for (int i = 0; i < variables(); ++i) g.col(i) = 2.0 * (blocks[i] * scores.col(i) - rhs.col(i));
  return g;
}

QuadraticForm ScoreQuadratic::to_dense() const {
  const int f = factors();
  const int p = variables();
  QuadraticForm out;
  out.Q = Matrix::Zero(f * p, f * p);
  out.q = Vector(f * p);
  for (int i = 0; i < p; ++i) {
    out.Q.block(i * f, i * f, f, f) = blocks[i];
    out.q.segment(i * f, f) = rhs.col(i);
  }
  out.c = c;
  return out;
}

namespace {

bool all_ones(const Matrix& mask) { return (mask.array() == 1.0).all(); }

struct FactorPartial {
  Matrix Q;
  Vector q;
  double c = 0.0;
};

// Contribution of one subject to the factor quadratic.
FactorPartial factor_partial(const Matrix& X, const Matrix& mask, const Matrix& A, const DelayVector& d,
                             int n_F, const Window& window, bool masked) {
  const int f = static_cast<int>(A.rows());
  const int n = window.length;
  FactorPartial out{Matrix::Zero(n_F * f, n_F * f), Vector::Zero(n_F * f), 0.0};

  Matrix B;        // n x f, (mask o X) A'
  Matrix G_full;   // f x f, A A' (unmasked)
  if (masked) {
    const Matrix xm = mask.cwiseProduct(X);
    B = xm * A.transpose();
    out.c = xm.squaredNorm();
  } else {
    B = X * A.transpose();
    G_full = A * A.transpose();
    out.c = X.squaredNorm();
  }

  std::vector<int> rows(f);
  Matrix G(f, f);
  for (int t = 0; t < n; ++t) {
    if (masked) {
      // G_t = A diag(mask row t) A'
      G = A * mask.row(t).transpose().asDiagonal() * A.transpose();
    } else {
      G = G_full;
    }
    for (int k = 0; k < f; ++k) rows[k] = source_row(window.start, t, d[k], n_F);
    for (int k = 0; k < f; ++k) {
      out.q[k * n_F + rows[k]] += B(t, k);
      for (int l = 0; l < f; ++l) out.Q(k * n_F + rows[k], l * n_F + rows[l]) += G(k, l);
    }
  }
  return out;
}

void check_subject_shapes(const ObservationSet& data, const std::vector<Matrix>& scores,
                          const std::vector<DelayVector>& delays, int f) {
  const int S = data.num_subjects();
  if (static_cast<int>(delays.size()) != S) throw DimensionError("one delay vector per subject is required");
  if (scores.size() != 1 && static_cast<int>(scores.size()) != S)
    throw DimensionError("scores must hold S matrices or a single shared matrix");
  for (const auto& a : scores)
    if (a.rows() != f || a.cols() != data.cols())
      throw DimensionError("score matrix must be f x p");
  for (const auto& d : delays)
    if (d.size() != f) throw DimensionError("delay vector length must equal f");
}

}  // namespace

QuadraticForm assemble_factor_quadratic(const ObservationSet& data, const std::vector<Matrix>& scores,
                                        const std::vector<DelayVector>& delays, int n_F,
                                        const Window& window, double beta, const Matrix& W,
                                        MaskPath path, Execution exec) {
  if (scores.empty()) throw DimensionError("no score matrices");
  const int f = static_cast<int>(scores[0].rows());
  check_subject_shapes(data, scores, delays, f);
  if (window.length != data.rows() || window.start < 0 || window.start + window.length > n_F)
    throw DimensionError("observation window does not fit the factor length");
  if (W.cols() != n_F) throw DimensionError("difference operator must have n_F columns");

  const int S = data.num_subjects();
  std::vector<FactorPartial> partials(S);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int s = 0; s < S; ++s) {
    const Matrix& A = scores.size() == 1 ? scores[0] : scores[s];
    const bool masked = path == MaskPath::masked || !all_ones(data.masks[s]);
    partials[s] = factor_partial(data.subjects[s], data.masks[s], A, delays[s], n_F, window, masked);
  }

  QuadraticForm out{Matrix::Zero(n_F * f, n_F * f), Vector::Zero(n_F * f), 0.0};
  for (const auto& part : partials) {
    out.Q += part.Q;
    out.q += part.q;
    out.c += part.c;
  }
  if (beta > 0.0) {
    const Matrix WtW = beta * (W.transpose() * W);
    for (int k = 0; k < f; ++k) out.Q.block(k * n_F, k * n_F, n_F, n_F) += WtW;
  }
  return out;
}

ScoreQuadratic assemble_score_quadratic(const Matrix& X, const Matrix& factors, const DelayVector& d,
                                        const Window& window) {
  if (X.rows() != window.length) throw DimensionError("observation rows must equal the window length");
  const Matrix M = windowed_factors(factors, d, window);
  const Matrix G = M.transpose() * M;
  ScoreQuadratic out;
  out.blocks.assign(X.cols(), G);
  out.rhs = M.transpose() * X;
  out.column_energy = X.colwise().squaredNorm().transpose();
  out.c = out.column_energy.sum();
  return out;
}

ScoreQuadratic assemble_score_quadratic(const Matrix& X, const Matrix& factors, const DelayVector& d,
                                        const Matrix& mask, const Window& window) {
  if (X.rows() != window.length) throw DimensionError("observation rows must equal the window length");
  if (mask.rows() != X.rows() || mask.cols() != X.cols()) throw DimensionError("mask shape mismatch");
  const Matrix M = windowed_factors(factors, d, window);
  const Matrix xm = mask.cwiseProduct(X);
  ScoreQuadratic out;
  out.blocks.resize(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    out.blocks[i] = M.transpose() * mask.col(i).asDiagonal() * M;
  out.rhs = M.transpose() * xm;
  out.column_energy = xm.colwise().squaredNorm().transpose();
  out.c = out.column_energy.sum();
  return out;
}

std::vector<ScoreQuadratic> assemble_score_quadratics(const ObservationSet& data, const Matrix& factors,
                                                      const std::vector<DelayVector>& delays,
                                                      const Window& window, MaskPath path, Execution exec) {
  const int S = data.num_subjects();
  if (static_cast<int>(delays.size()) != S) throw DimensionError("one delay vector per subject is required");
  // Everything that can throw is checked here, outside the parallel region.
  if (data.rows() != window.length || window.start < 0 || window.start + window.length > factors.rows())
    throw DimensionError("observation window does not fit the factor length");
  for (const auto& d : delays)
    if (d.size() != factors.cols()) throw DimensionError("delay vector length must equal f");
  std::vector<ScoreQuadratic> out(S);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int s = 0; s < S; ++s) {
    if (path == MaskPath::masked || !all_ones(data.masks[s]))
      out[s] = assemble_score_quadratic(data.subjects[s], factors, delays[s], data.masks[s], window);
    else
      out[s] = assemble_score_quadratic(data.subjects[s], factors, delays[s], window);
  }
  return out;
}

}  // namespace opfa
