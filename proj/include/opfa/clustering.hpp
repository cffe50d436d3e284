#pragma once

#include "opfa/types.hpp"

#include <vector>

namespace opfa {

/// Agglomerative average-linkage clustering of the columns of `profiles`
/// (each column one item), merged until `clusters` groups remain.
/// Returns a label in [0, clusters) per column; labels are numbered by the
/// smallest member index.
std::vector<int> average_linkage(const Matrix& profiles, int clusters);

/// Columns scaled to unit Euclidean norm; zero columns stay zero.
Matrix normalize_columns(const Matrix& profiles);

}  // namespace opfa
