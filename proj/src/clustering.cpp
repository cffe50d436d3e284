#include "opfa/clustering.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace opfa {

Matrix normalize_columns(const Matrix& profiles) {
  Matrix out = profiles;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > 0.0) out.col(j) /= norm;
  }
  return out;
}

std::vector<int> average_linkage(const Matrix& profiles, int clusters) {
  const int p = static_cast<int>(profiles.cols());
  if (clusters < 1 || clusters > p) throw std::invalid_argument("cluster count must be in [1, p]");

  Matrix dist(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) dist(a, b) = (profiles.col(a) - profiles.col(b)).norm();

  std::vector<int> size(p, 1);
  std::vector<bool> alive(p, true);
  std::vector<int> owner(p);  // item -> representative cluster
  std::iota(owner.begin(), owner.end(), 0);

  // Lance-Williams update for average linkage; the merged cluster keeps the
  // smaller representative index so ties resolve deterministically.
  for (int remaining = p; remaining > clusters; --remaining) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (int a = 0; a < p; ++a) {
      if (!alive[a]) continue;
      for (int b = a + 1; b < p; ++b) {
        if (!alive[b]) continue;
        if (dist(a, b) < best) {
          best = dist(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    for (int c = 0; c < p; ++c) {
      if (!alive[c] || c == ba || c == bb) continue;
      const double merged = (size[ba] * dist(ba, c) + size[bb] * dist(bb, c)) / (size[ba] + size[bb]);
      dist(ba, c) = dist(c, ba) = merged;
    }
    size[ba] += size[bb];
    alive[bb] = false;
    for (int i = 0; i < p; ++i)
      if (owner[i] == bb) owner[i] = ba;
  }

  std::vector<int> label(p, -1);
  std::vector<int> rep_label(p, -1);
  int next = 0;
  for (int i = 0; i < p; ++i) {
    const int rep = owner[i];
    if (rep_label[rep] < 0) rep_label[rep] = next++;
    label[i] = rep_label[rep];
  }
  return label;
}

}  // namespace opfa
