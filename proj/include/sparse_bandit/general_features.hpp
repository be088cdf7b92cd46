#pragma once

// Representative actions from per-subset designs, compressed estimation over
// them, and exact s-sparse l-infinity recovery by support enumeration.

#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/compressed_elimination.hpp"
#include "sparse_bandit/design_elimination.hpp"
#include "sparse_bandit/g_optimal_design.hpp"
#include "sparse_bandit/jl_compression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace sparse_bandit {

namespace detail {

struct LpSolution {
  Vector x;
  Vector duals;  // simplex multipliers of the equality rows
  double value = 0.0;
};

/// max c^T x  s.t.  E x = f, x >= 0, by a dense two-phase simplex with
/// Bland's rule (no cycling on degenerate vertices). Throws if infeasible,
/// unbounded or out of iterations.
inline LpSolution maximize_standard_form(const Matrix& e, const Vector& f, const Vector& c) {
  constexpr double tol = 1e-11;
  const Eigen::Index m = e.rows();
  const Eigen::Index n = e.cols();
  const Eigen::Index width = n + m + 1;
  Matrix t = Matrix::Zero(m, width);
  Vector sign = Vector::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (f(i) < 0.0) sign(i) = -1.0;
    t.row(i).head(n) = sign(i) * e.row(i);
    t(i, n + i) = 1.0;
    t(i, width - 1) = sign(i) * f(i);
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  auto pivot = [&](Eigen::Index r, Eigen::Index col) {
    t.row(r) /= t(r, col);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i != r && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = col;
  };

  auto optimise = [&](const Vector& cost, Eigen::Index allowed) {
    for (std::size_t iter = 0; iter < 100'000; ++iter) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        double reduced = cost(j);
        for (Eigen::Index i = 0; i < m; ++i) reduced -= cost(basis[static_cast<std::size_t>(i)]) * t(i, j);
        if (reduced > tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, entering) > tol) best_ratio = std::min(best_ratio, t(i, width - 1) / t(i, entering));
      }
      Eigen::Index leave = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, entering) <= tol || t(i, width - 1) / t(i, entering) > best_ratio + tol) continue;
        if (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) leave = i;
      }
      if (leave < 0) throw NumericalError("linear program is unbounded");
      pivot(leave, entering);
    }
    throw NumericalError("simplex iteration limit reached");
  };

  Vector phase1 = Vector::Zero(n + m);
  phase1.tail(m).setConstant(-1.0);
  optimise(phase1, n + m);
  double infeasibility = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= n) infeasibility += t(i, width - 1);
  }
  if (infeasibility > 1e-9) throw NumericalError("linear program is infeasible");
  // Drive zero-level artificials out of the basis where a real column allows it.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(t(i, j)) > 1e-9) {
        pivot(i, j);
        break;
      }
    }
  }

  Vector phase2 = Vector::Zero(n + m);
  phase2.head(n) = c;
  optimise(phase2, n);

  LpSolution out;
  out.x = Vector::Zero(n);
  Vector cb(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index b = basis[static_cast<std::size_t>(i)];
    if (b < n) out.x(b) = t(i, width - 1);
    cb(i) = phase2(b);
  }
  // The artificial columns hold B^{-1} of the sign-adjusted system.
  const Matrix b_inv = t.block(0, n, m, m);
  out.duals = (b_inv.transpose() * cb).cwiseProduct(sign);
  out.value = c.dot(out.x);
  return out;
}

}  // namespace detail

struct MinimaxFit {
  Vector theta;  // over the given columns
  double objective = 0.0;
};

/// Exact min_theta ||A theta - y||_inf. Solved through its dual
/// max y^T (u - v) s.t. A^T (u - v) = 0, sum(u + v) = 1, u, v >= 0, whose
/// multipliers are (theta, t).
inline MinimaxFit minimax_fit(const Matrix& a, const Vector& y) {
  const Eigen::Index m = a.rows();
  const Eigen::Index r = a.cols();
  Matrix e = Matrix::Zero(r + 1, 2 * m);
  e.block(0, 0, r, m) = a.transpose();
  e.block(0, m, r, m) = -a.transpose();
  e.row(r).setOnes();
  Vector f = Vector::Zero(r + 1);
  f(r) = 1.0;
  Vector c(2 * m);
  c.head(m) = y;
  c.tail(m) = -y;
  const auto lp = detail::maximize_standard_form(e, f, c);
  MinimaxFit fit;
  fit.theta = lp.duals.head(r);
  fit.objective = m == 0 ? 0.0 : (a * fit.theta - y).cwiseAbs().maxCoeff();
  return fit;
}

struct SparseRecovery {
  Vector theta;  // d coordinates, zero outside the support
  IndexSet support;
  double objective = 0.0;
};

/// Exact minimiser of ||Psi theta - targets||_inf over ||theta||_0 <= s by
/// enumerating supports of size s; ties keep the lexicographically first.
inline SparseRecovery sparse_linf_recover(const Matrix& psi, const Vector& targets, Index s,
                                          std::uint64_t max_subsets = kMaxDesignSubsets) {
  if (targets.size() != psi.rows()) throw ValidationError("dimension mismatch", "need one target per row of Psi");
  const Index d = static_cast<Index>(psi.cols());
  if (s < 1 || s > d) throw ValidationError("sparsity range", "need 1 <= s <= d");
  if (binomial(d, s) > max_subsets) throw GuardError("recovery needs " + std::to_string(binomial(d, s)) + " supports");
  if (psi.size() == 0 || psi.cwiseAbs().maxCoeff() == 0.0) throw ValidationError("degenerate design matrix", "Psi is all zero");
  SparseRecovery best;
  best.objective = std::numeric_limits<double>::infinity();
  for (const auto& support : all_subsets(d, s)) {
    const auto fit = minimax_fit(restrict_columns(psi, support), targets);
    if (fit.objective < best.objective - 1e-12) {
      best.objective = fit.objective;
      best.support = support;
      best.theta = embed_vector(fit.theta, support, d);
    }
  }
  return best;
}

struct Representatives {
  Matrix psi;               // (C(d,s) z) x d
  std::vector<Index> rows;  // row of Phi behind each Psi row
  Index z = 0;
};

/// Stacks z support actions of a design over Phi_M for every s-subset M,
/// padding short supports with the heaviest-weight action.
inline Representatives collect_representatives(const FeatureMatrix& features, Index s, const DesignOptions& design = {},
                                               std::uint64_t max_subsets = kMaxDesignSubsets) {
  const Index d = features.d();
  if (s < 1 || s > d) throw ValidationError("sparsity range", "need 1 <= s <= d");
  if (binomial(d, s) > max_subsets) {
    throw GuardError("representative collection needs " + std::to_string(binomial(d, s)) + " subsets, above the cap of " +
                     std::to_string(max_subsets));
  }
  Representatives out;
  out.z = design_support_bound(s);
  for (const auto& m : all_subsets(d, s)) {
    const auto rho = frank_wolfe_design(restrict_columns(features.matrix(), m), design);
    std::pair<Index, double> heaviest = rho.support.front();
    for (const auto& entry : rho.support) {
      out.rows.push_back(entry.first);
      if (entry.second > heaviest.second) heaviest = entry;
    }
    for (std::size_t pad = rho.support.size(); pad < out.z; ++pad) out.rows.push_back(heaviest.first);
  }
  out.psi = restrict_rows(features.matrix(), out.rows);
  return out;
}

struct GeneralOptions {
  double c_const = 2.0;
  double c_jl = kDefaultJlConstant;
  /// Default budget: z rounds of a full design in the compressed space.
  std::optional<std::size_t> budget;
  std::uint64_t map_seed = 0;
  std::size_t certify_retries = kDefaultCertifyRetries;
  DesignOptions design;
};

struct GeneralResult {
  Vector theta;  // d coordinates
  IndexSet support;
  double recovery_objective = 0.0;
  double phi = 0.0;
  Index q = 0;
  std::size_t psi_rows = 0;
  std::size_t budget = 0;
  double map_violation = 0.0;
  std::uint64_t map_seed = 0;
  BenignResult compressed;
  std::size_t queries = 0;
};

/// phi = (s log d)^{1/4} sqrt(eps).
inline double general_phi(Index s, Index d, double epsilon) {
  return std::pow(static_cast<double>(s) * std::log(static_cast<double>(d)), 0.25) * std::sqrt(epsilon);
}

/// Full pipeline. The map is certified against theta* here, so this entry
/// point is harness-side; the compressed elimination itself never sees theta*.
inline GeneralResult run_general_features(const BanditInstance& instance, QueryLedger& ledger, const GeneralOptions& opt = {}) {
  const Index d = instance.d();
  const Index s = instance.s();
  if (d < 2) throw ValidationError("dimension range", "general features needs d >= 2");
  GeneralResult res;
  const Representatives reps = collect_representatives(instance.features(), s, opt.design);
  res.psi_rows = reps.rows.size();
  res.phi = general_phi(s, d, instance.epsilon());
  res.q = choose_target_dim(std::max(2.0, static_cast<double>(binomial(d, s)) * static_cast<double>(reps.z)), res.phi, d,
                            opt.c_jl);
  const auto certified = certified_map(reps.psi, instance.theta_star().coords(), res.q, res.phi, opt.map_seed,
                                       opt.certify_retries);
  res.map_violation = certified.violation;
  res.map_seed = certified.map.seed;
  res.budget = opt.budget.value_or(static_cast<std::size_t>(reps.z) * static_cast<std::size_t>(design_support_bound(res.q)));

  BenignOptions bopt;
  bopt.c_const = opt.c_const;
  bopt.actions = reps.rows;
  bopt.design = opt.design;
  const std::size_t start = ledger.size();
  res.compressed = run_benign_elimination(instance, certified.map, res.budget, ledger, bopt);
  res.queries = ledger.size() - start;

  const Vector targets = certified.map.apply_rows(reps.psi) * res.compressed.theta;
  const auto rec = sparse_linf_recover(reps.psi, targets, s);
  res.theta = rec.theta;
  res.support = rec.support;
  res.recovery_objective = rec.objective;
  return res;
}

struct MergedDiagnostic {
  IndexSet merged;     // supp(theta_hat) union M*
  double g_value = 0.0;
  double formula_bound = 0.0;  // C (s log d)^{1/4} sqrt(eps) sqrt(g)
  /// eps + max over the design support of |<a, theta_hat - theta*>| * sqrt(g):
  /// a valid bound on every row's error because the difference lives on the
  /// merged columns.
  double chain_bound = 0.0;
  double measured_error = 0.0;
};

/// Harness-side bound-tightness report (reads theta*).
inline MergedDiagnostic merged_set_diagnostic(const BanditInstance& instance, const Vector& theta_hat, double c_const = 2.0) {
  MergedDiagnostic out;
  for (Eigen::Index j = 0; j < theta_hat.size(); ++j) {
    if (theta_hat(j) != 0.0) out.merged.push_back(static_cast<Index>(j));
  }
  for (Index j : instance.theta_star().support()) out.merged.push_back(j);
  std::sort(out.merged.begin(), out.merged.end());
  out.merged.erase(std::unique(out.merged.begin(), out.merged.end()), out.merged.end());

  const Matrix restricted = restrict_columns(instance.features().matrix(), out.merged);
  const auto rho = frank_wolfe_design(restricted);
  out.g_value = rho.g_value;
  out.formula_bound = c_const * general_phi(instance.s(), instance.d(), instance.epsilon()) * std::sqrt(out.g_value);
  const Vector diff = theta_hat - instance.theta_star().coords();
  double worst = 0.0;
  for (const auto& [i, w] : rho.support) {
    worst = std::max(worst, std::abs(instance.features().matrix().row(static_cast<Eigen::Index>(i)).dot(diff)));
  }
  out.chain_bound = instance.epsilon() + worst * std::sqrt(out.g_value);
  out.measured_error = uniform_error(instance, theta_hat);
  return out;
}

}  // namespace sparse_bandit
