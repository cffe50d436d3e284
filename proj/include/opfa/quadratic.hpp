#pragma once

#include "opfa/types.hpp"

#include <vector>

namespace opfa {

/// x -> x'Qx - 2q'x + c over a flattened variable.
struct QuadraticForm {
  Matrix Q;
  Vector q;
  double c = 0.0;

  int dim() const { return static_cast<int>(q.size()); }
  double value(const Vector& x) const { return x.dot(Q * x) - 2.0 * q.dot(x) + c; }
  Vector gradient(const Vector& x) const { return 2.0 * (Q * x - q); }
};

/// Per-subject score quadratic. Block-diagonal over the p variables: block i
/// is M' diag(w_i) M (f x f) and rhs column i is M' diag(w_i) X_i, where M is
/// the windowed shifted factor matrix and w_i the mask column.
struct ScoreQuadratic {
  std::vector<Matrix> blocks;  ///< p blocks, f x f
  Matrix rhs;                  ///< f x p
  Vector column_energy;        ///< p entries, ||w_i o X_i||^2
  double c = 0.0;

  int factors() const { return static_cast<int>(rhs.rows()); }
  int variables() const { return static_cast<int>(rhs.cols()); }

  /// Evaluates sum_i a_i' Q_i a_i - 2 q_i' a_i + c for an f x p score matrix.
  double value(const Matrix& scores) const;
  /// 2 (Q_i a_i - q_i) per column.
  Matrix gradient(const Matrix& scores) const;
  /// Dense (f p) x (f p) form over vec(A) (column-major: index i*f + j).
  QuadraticForm to_dense() const;
};

enum class MaskPath {
  automatic,  ///< closed-form unmasked path when every mask entry is one
  masked      ///< always run the generic masked assembly
};

/// Quadratic in vec(F) (column-major, index k*n_F + r) whose value equals
/// sum_s ||[X_s - window(M(F,d_s)) A_s]_{mask_s}||^2 + beta * sum_k ||W F_k||^2.
/// `scores` holds S matrices, or one shared matrix.
QuadraticForm assemble_factor_quadratic(const ObservationSet& data, const std::vector<Matrix>& scores,
                                        const std::vector<DelayVector>& delays, int n_F,
                                        const Window& window, double beta, const Matrix& W,
                                        MaskPath path = MaskPath::automatic,
                                        Execution exec = Execution::serial);

/// Unmasked closed form: every block equals M'M and rhs = M'X.
ScoreQuadratic assemble_score_quadratic(const Matrix& X, const Matrix& factors, const DelayVector& d,
                                        const Window& window);

/// Masked assembly.
ScoreQuadratic assemble_score_quadratic(const Matrix& X, const Matrix& factors, const DelayVector& d,
                                        const Matrix& mask, const Window& window);

/// All subjects; picks the closed form for fully observed subjects unless
/// `path` forces the masked route.
std::vector<ScoreQuadratic> assemble_score_quadratics(const ObservationSet& data, const Matrix& factors,
                                                      const std::vector<DelayVector>& delays,
                                                      const Window& window,
                                                      MaskPath path = MaskPath::automatic,
                                                      Execution exec = Execution::serial);

}  // namespace opfa
