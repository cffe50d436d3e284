#pragma once

#include "opfa/types.hpp"

namespace opfa {

/// output[i] = column[(i - delay) mod n_F]; a positive delay moves the
/// waveform later in time. Delays are reduced modulo the column length.
Vector circular_shift(const Vector& column, int delay);

/// Column j of the result is circular_shift(F.col(j), d[j]).
Matrix build_shifted_factors(const Matrix& factors, const DelayVector& d);

/// Rows [window_start, window_start + n) of M.
Matrix window_restrict(const Matrix& m, int window_start, int n);

/// Row index of F feeding window row t of factor column k under delay d:
/// (window_start + t - d) mod n_F.
inline int source_row(int window_start, int t, int delay, int n_F) {
  int r = (window_start + t - delay) % n_F;
  return r < 0 ? r + n_F : r;
}

/// Windowed shifted factor matrix (n x f) without materialising the n_F rows.
Matrix windowed_factors(const Matrix& factors, const DelayVector& d, const Window& window);

/// Membership in the order-preserving cone: 0 <= d_1 <= ... <= d_f <= d_max.
bool in_order_cone(const DelayVector& d, int d_max);

/// window(M(F, d)) * A.
Matrix predict_subject(const Matrix& factors, const DelayVector& d, const Matrix& scores,
                       const Window& window);

/// Nonnegativity and Frobenius-ball membership with a relative slack.
bool in_factor_set(const Matrix& factors, double bound, double slack = 1e-9);

}  // namespace opfa
