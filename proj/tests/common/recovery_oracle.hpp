#pragma once

// Independent minimax-recovery oracle. For a fixed support with r columns the
// Chebyshev fit min ||A theta - y||_inf equals the largest reference-set
// residual: over (r+1)-row subsets R whose transposed block has a one-dimensional
// kernel lambda, the subset's own minimax is |lambda^T y_R| / ||lambda||_1.
// No LP is involved, so agreement with the solver is a genuine cross-check.

#include "sparse_bandit/combinatorics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace sparse_bandit::oracle {

inline double reference_set_minimax(const Matrix& a, const Vector& y) {
  const Index r = static_cast<Index>(a.cols());
  double value = 0.0;
  for (const auto& rows : all_subsets(static_cast<Index>(a.rows()), r + 1)) {
    const Matrix block = restrict_rows(a, rows);
    Eigen::FullPivLU<Matrix> lu(block.transpose());
    const Matrix kernel = lu.kernel();
    if (kernel.cols() != 1) continue;
    const Vector lambda = kernel.col(0);
    value = std::max(value, std::abs(lambda.dot(restrict_vector(y, rows))) / lambda.cwiseAbs().sum());
  }
  return value;
}

inline double sparse_minimax(const Matrix& psi, const Vector& y, Index s) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& support : all_subsets(static_cast<Index>(psi.cols()), s)) {
    best = std::min(best, reference_set_minimax(restrict_columns(psi, support), y));
  }
  return best;
}

}  // namespace sparse_bandit::oracle
