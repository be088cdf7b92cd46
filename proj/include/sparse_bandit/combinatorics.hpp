#pragma once

#include "sparse_bandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace sparse_bandit {

using IndexSet = std::vector<Index>;

/// Binomial coefficient, saturating at uint64 max.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    // result * num / i is exact at every step; guard the multiplication.
    if (result > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    result = result * num / i;
  }
  return result;
}

/// All size-`s` subsets of {0, ..., d-1} in lexicographic order.
inline std::vector<IndexSet> all_subsets(Index d, Index s) {
  std::vector<IndexSet> out;
  if (s > d) return out;
  IndexSet current(s);
  for (Index i = 0; i < s; ++i) current[i] = i;
  while (true) {
    out.push_back(current);
    if (s == 0) break;
    Index pos = s;
    while (pos > 0 && current[pos - 1] == d - s + (pos - 1)) --pos;
    if (pos == 0) break;
    ++current[pos - 1];
    for (Index j = pos; j < s; ++j) current[j] = current[j - 1] + 1;
  }
  return out;
}

/// Column restriction Phi_M.
inline Matrix restrict_columns(const Matrix& rows, std::span<const Index> columns) {
  Matrix out(rows.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = rows.col(static_cast<Eigen::Index>(columns[j]));
  }
  return out;
}

/// Row selection (duplicates allowed, order kept).
inline Matrix restrict_rows(const Matrix& rows, std::span<const Index> selected) {
  Matrix out(static_cast<Eigen::Index>(selected.size()), rows.cols());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(selected[i]));
  }
  return out;
}

inline Vector restrict_vector(const Vector& v, std::span<const Index> indices) {
  Vector out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    out(static_cast<Eigen::Index>(j)) = v(static_cast<Eigen::Index>(indices[j]));
  }
  return out;
}

/// Scatter a restricted vector back into `d` coordinates (zeros elsewhere).
inline Vector embed_vector(const Vector& restricted, std::span<const Index> indices, Index d) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    out(static_cast<Eigen::Index>(indices[j])) = restricted(static_cast<Eigen::Index>(j));
  }
  return out;
}

/// Core-set size bound ceil(4 s log log s + 16), with the log log argument
/// clamped to max(s, 3) so it stays positive.
inline Index design_support_bound(Index s) {
  const double arg = static_cast<double>(std::max<Index>(s, 3));
  return static_cast<Index>(std::ceil(4.0 * static_cast<double>(s) * std::log(std::log(arg)) + 16.0));
}

}  // namespace sparse_bandit
