#pragma once

// Near-G-optimal designs via Frank-Wolfe with away steps (Wolfe-Atwood) on
// the log-det objective, and the design-weighted least-squares estimator.

#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace sparse_bandit {

struct DesignOptions {
  std::size_t max_iterations = 10'000;
  double prune_threshold = 1e-10;
  double pivot_threshold = 1e-10;
  /// Stop once g <= target_factor * rank. The default is the core-set target 2s.
  double target_factor = 2.0;
};

struct DesignDistribution {
  /// (row index, weight) pairs, ascending by row index.
  std::vector<std::pair<Index, double>> support;
  /// Columns of the input kept after discarding linearly dependent ones.
  IndexSet retained_columns;
  Matrix design_matrix;   // G(rho) over the retained columns
  Matrix design_inverse;  // G(rho)^{-1}
  double g_value = 0.0;   // max over all rows of a^T G^{-1} a
  /// g after initialisation and after every Frank-Wolfe step.
  std::vector<double> g_trace;
  std::size_t iterations = 0;
  /// Steps abandoned because no step length decreased g.
  std::size_t stalled_steps = 0;

  Index rank() const { return retained_columns.size(); }
};

namespace detail {

/// Columns kept by column-pivoted QR with relative pivot threshold.
inline IndexSet independent_columns(const Matrix& rows, double threshold) {
  Eigen::ColPivHouseholderQR<Matrix> qr(rows);
  qr.setThreshold(threshold);
  const auto rank = qr.rank();
  IndexSet cols;
  for (Eigen::Index j = 0; j < rank; ++j) cols.push_back(static_cast<Index>(qr.colsPermutation().indices()(j)));
  std::sort(cols.begin(), cols.end());
  return cols;
}

/// Kumar-Yildirim style start: for each new direction orthogonal to the span
/// so far, add the rows attaining max and min projection. At most 2r rows.
inline std::vector<Index> initial_rows(const Matrix& a) {
  const Eigen::Index k = a.rows();
  const Eigen::Index r = a.cols();
  Matrix basis(r, 0);
  std::vector<Index> chosen;
  auto add = [&](Index i) {
    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
  };
  for (Eigen::Index step = 0; step < r; ++step) {
    Matrix residual = a;
    if (basis.cols() > 0) residual -= (a * basis) * basis.transpose();
    Eigen::Index best = 0;
    residual.rowwise().squaredNorm().maxCoeff(&best);
    const double norm = residual.row(best).norm();
    if (norm <= 1e-12) break;
    const Vector dir = residual.row(best).transpose() / norm;
    const Vector proj = a * dir;
    Eigen::Index hi = 0;
    Eigen::Index lo = 0;
    proj.maxCoeff(&hi);
    proj.minCoeff(&lo);
    add(static_cast<Index>(hi));
    if (proj(lo) < 0.0) add(static_cast<Index>(lo));
    basis.conservativeResize(r, basis.cols() + 1);
    basis.col(basis.cols() - 1) = dir;
    if (static_cast<Eigen::Index>(chosen.size()) >= std::min<Eigen::Index>(2 * r, k)) break;
  }
  return chosen;
}

struct Leverages {
  Matrix g;
  Matrix g_inv;
  Vector values;
  bool ok = false;
};

inline Leverages leverages(const Matrix& a, const Vector& weights) {
  Leverages out;
  out.g = a.transpose() * weights.asDiagonal() * a;
  Eigen::LLT<Matrix> llt(out.g);
  if (llt.info() != Eigen::Success) return out;
  out.g_inv = llt.solve(Matrix::Identity(out.g.rows(), out.g.cols()));
  out.values = (a * out.g_inv).cwiseProduct(a).rowwise().sum();
  out.ok = out.values.allFinite();
  return out;
}

}  // namespace detail

/// Frank-Wolfe design over the rows of `rows` (k x s). Linearly dependent
/// columns are discarded first; the design lives in the retained columns.
inline DesignDistribution frank_wolfe_design(const Matrix& rows, const DesignOptions& opt = {}) {
  if (rows.rows() < 1 || rows.cols() < 1) throw ValidationError("design input", "need at least one row and column");
  DesignDistribution out;
  out.retained_columns = detail::independent_columns(rows, opt.pivot_threshold);
  if (out.retained_columns.empty()) {
    throw NumericalError("rank deficiency after column discarding: the feature rows are all zero");
  }
  const Matrix a = restrict_columns(rows, out.retained_columns);
  const Eigen::Index k = a.rows();
  const double r = static_cast<double>(a.cols());
  const double target = opt.target_factor * r;

  Vector w = Vector::Zero(k);
  {
    const auto start = detail::initial_rows(a);
    for (Index i : start) w(static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(start.size());
  }
  auto lev = detail::leverages(a, w);
  if (!lev.ok) throw NumericalError("initial design is singular after column discarding");
  Eigen::Index top = 0;
  double g = lev.values.maxCoeff(&top);
  out.g_trace.push_back(g);

  std::size_t it = 0;
  for (; it < opt.max_iterations && g > target; ++it) {
    // Least useful support row for a possible away step.
    Eigen::Index low = -1;
    double low_val = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (w(i) > 0.0 && lev.values(i) < low_val) {
        low_val = lev.values(i);
        low = i;
      }
    }
    Eigen::Index j = top;
    double lambda = (g - r) / (r * (g - 1.0));
    const bool away_ok = low >= 0 && w(low) < 1.0 && w(low) * low_val < 1.0 - 1e-12;
    if (away_ok && (r - low_val) > (g - r)) {
      j = low;
      const double floor = -w(low) / (1.0 - w(low));
      lambda = low_val > 1.0 ? std::max((low_val - r) / (r * (low_val - 1.0)), floor) : floor;
    }
    // Largest step along the chosen direction, halved until g does not increase.
    Vector next;
    detail::Leverages next_lev;
    auto try_step = [&](Eigen::Index row, double step) {
      for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
        next = (1.0 - step) * w;
        next(row) += step;
        for (Eigen::Index i = 0; i < k; ++i) {
          if (next(i) < opt.prune_threshold) next(i) = 0.0;
        }
        next /= next.sum();
        next_lev = detail::leverages(a, next);
        if (next_lev.ok && next_lev.values.maxCoeff() <= g) return true;
      }
      return false;
    };
    bool accepted = try_step(j, lambda);
    if (!accepted && j != top) accepted = try_step(top, (g - r) / (r * (g - 1.0)));
    if (!accepted) {
      ++out.stalled_steps;
      break;
    }
    w = std::move(next);
    lev = std::move(next_lev);
    g = lev.values.maxCoeff(&top);
    out.g_trace.push_back(g);
  }
  out.iterations = it;
  if (g > target * (1.0 + 1e-6)) {
    throw ConvergenceError("Frank-Wolfe stopped after " + std::to_string(it) + " iterations with g = " + std::to_string(g) + " > target " +
                               std::to_string(target),
                           g);
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (w(i) > 0.0) out.support.emplace_back(static_cast<Index>(i), w(i));
  }
  out.design_matrix = std::move(lev.g);
  out.design_inverse = std::move(lev.g_inv);
  out.g_value = g;
  return out;
}

/// Exact max over all rows of a^T G(rho)^{-1} a, recomputed from the support.
inline double g_value(const Matrix& rows, const DesignDistribution& design) {
  const Matrix a = restrict_columns(rows, design.retained_columns);
  Matrix g = Matrix::Zero(a.cols(), a.cols());
  for (const auto& [i, w] : design.support) {
    const auto row = a.row(static_cast<Eigen::Index>(i));
    g += w * row.transpose() * row;
  }
  Eigen::FullPivLU<Matrix> lu(g);
  if (!lu.isInvertible()) throw NumericalError("design matrix is singular");
  const Matrix g_inv = lu.inverse();
  return (a * g_inv).cwiseProduct(a).rowwise().sum().maxCoeff();
}

/// theta = G^{-1} sum_a rho(a) r_a a over the support, expanded to all input
/// columns (discarded columns get 0). `rewards[i]` pairs with support[i].
inline Vector design_estimate(const Matrix& rows, const DesignDistribution& design, std::span<const double> rewards) {
  const Eigen::Index r = static_cast<Eigen::Index>(design.rank());
  Vector moment = Vector::Zero(r);
  for (std::size_t t = 0; t < design.support.size(); ++t) {
    const auto [i, w] = design.support[t];
    moment += w * rewards[t] * restrict_vector(rows.row(static_cast<Eigen::Index>(i)).transpose(), design.retained_columns);
  }
  const Vector reduced = design.design_inverse * moment;
  return embed_vector(reduced, design.retained_columns, static_cast<Index>(rows.cols()));
}

/// Queries every support action of a design built over Phi_M exactly once and
/// returns theta_M (length |M|).
inline Vector estimate_parameter(const BanditInstance& instance, std::span<const Index> index_set,
                                 const DesignDistribution& design, QueryLedger& ledger) {
  const Matrix restricted = restrict_columns(instance.features().matrix(), index_set);
  std::vector<double> rewards;
  rewards.reserve(design.support.size());
  for (const auto& [i, w] : design.support) rewards.push_back(query(instance, i, ledger));
  return design_estimate(restricted, design, rewards);
}

}  // namespace sparse_bandit
