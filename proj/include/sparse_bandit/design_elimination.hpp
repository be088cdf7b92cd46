#pragma once

// Design-based subset elimination: a near-G-optimal estimate per s-subset,
// then pairwise elimination of subsets whose predictions disagree.

#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/g_optimal_design.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace sparse_bandit {

inline constexpr std::uint64_t kMaxDesignSubsets = 100'000;

struct DesignEliminationOptions {
  DesignOptions design;
  std::uint64_t max_subsets = kMaxDesignSubsets;
};

/// eps (1 + sqrt(2 s)): the per-subset certificate width.
inline double design_certificate(double epsilon, Index s) {
  return epsilon * (1.0 + std::sqrt(2.0 * static_cast<double>(s)));
}

/// (support bound + 1) * C(d, s).
inline std::uint64_t design_elimination_query_bound(Index d, Index s) {
  return (static_cast<std::uint64_t>(design_support_bound(s)) + 1) * binomial(d, s);
}

struct SubsetEliminationEvent {
  std::size_t query;  // 1-based within phase 2
  Index action;
  double reward;
  Index subset;        // M
  Index rival;         // M'
  bool removed_subset;  // M removed
  bool removed_rival;   // M' removed
};

struct DesignEliminationResult {
  IndexSet support;  // L
  Vector theta;      // theta_L, length s
  Index subset_index = 0;
  std::vector<IndexSet> subsets;
  std::vector<Vector> estimates;  // Phase 1 theta_M per subset
  std::vector<bool> survived;
  std::size_t phase1_queries = 0;
  std::size_t phase2_queries = 0;
  std::size_t queries = 0;
  std::vector<SubsetEliminationEvent> log;
};

inline DesignEliminationResult run_design_elimination(const BanditInstance& instance, QueryLedger& ledger,
                                                      const DesignEliminationOptions& opt = {}) {
  if (instance.noise().kind != NoiseModel::Kind::kNone) {
    throw ValidationError("deterministic instance", "design elimination is defined for noiseless rewards only");
  }
  const Index d = instance.d();
  const Index s = instance.s();
  const std::uint64_t count = binomial(d, s);
  if (count > opt.max_subsets) {
    throw GuardError("design elimination needs C(" + std::to_string(d) + ", " + std::to_string(s) + ") = " +
                     std::to_string(count) + " subsets, above the cap of " + std::to_string(opt.max_subsets));
  }
  const Matrix& phi = instance.features().matrix();
  const Index k = instance.k();
  const double cert = design_certificate(instance.epsilon(), s);
  const double threshold = 2.0 * cert;

  DesignEliminationResult res;
  res.subsets = all_subsets(d, s);
  const Index n = res.subsets.size();
  const std::size_t start = ledger.size();

  Matrix pred(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Index m = 0; m < n; ++m) {
    const Matrix restricted = restrict_columns(phi, res.subsets[m]);
    const auto design = frank_wolfe_design(restricted, opt.design);
    res.estimates.push_back(estimate_parameter(instance, res.subsets[m], design, ledger));
    pred.row(static_cast<Eigen::Index>(m)) = (restricted * res.estimates.back()).transpose();
  }
  res.phase1_queries = ledger.size() - start;

  res.survived.assign(n, true);
  Vector hi(static_cast<Eigen::Index>(k));
  Vector lo(static_cast<Eigen::Index>(k));
  auto refresh = [&] {
    hi.setConstant(-std::numeric_limits<double>::infinity());
    lo.setConstant(std::numeric_limits<double>::infinity());
    for (Index m = 0; m < n; ++m) {
      if (!res.survived[m]) continue;
      hi = hi.cwiseMax(pred.row(static_cast<Eigen::Index>(m)).transpose());
      lo = lo.cwiseMin(pred.row(static_cast<Eigen::Index>(m)).transpose());
    }
  };
  refresh();

  auto p = [&](Index m, Index x) { return pred(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(x)); };

  // Subsets found violation-free stay so (the alive set only shrinks).
  Index cursor = 0;
  while (true) {
    std::optional<std::pair<Index, std::pair<Index, Index>>> found;  // (M, (M', x))
    for (Index m = cursor; m < n && !found; ++m) {
      if (!res.survived[m]) continue;
      bool any = false;
      for (Index x = 0; x < k && !any; ++x) {
        any = hi(static_cast<Eigen::Index>(x)) - p(m, x) > threshold || p(m, x) - lo(static_cast<Eigen::Index>(x)) > threshold;
      }
      if (!any) continue;
      for (Index m2 = 0; m2 < n && !found; ++m2) {
        if (m2 == m || !res.survived[m2]) continue;
        for (Index x = 0; x < k; ++x) {
          if (std::abs(p(m2, x) - p(m, x)) > threshold) {
            found = {m, {m2, x}};
            break;
          }
        }
      }
      cursor = m;
    }
    if (!found) break;
    const auto [m, rest] = *found;
    const auto [m2, x] = rest;
    const double r = query(instance, x, ledger);
    SubsetEliminationEvent ev{ledger.size() - start - res.phase1_queries, x, r, m, m2, false, false};
    if (std::abs(r - p(m, x)) <= cert) {
      ev.removed_rival = true;
    } else {
      ev.removed_subset = true;
      ev.removed_rival = std::abs(r - p(m2, x)) > cert;
    }
    if (ev.removed_subset) res.survived[m] = false;
    if (ev.removed_rival) res.survived[m2] = false;
    res.log.push_back(ev);
    refresh();
  }
  res.phase2_queries = ledger.size() - start - res.phase1_queries;
  res.queries = ledger.size() - start;

  for (Index m = 0; m < n; ++m) {
    if (res.survived[m]) {
      res.subset_index = m;
      res.support = res.subsets[m];
      res.theta = res.estimates[m];
      return res;
    }
  }
  throw NumericalError("design elimination removed every subset (double elimination emptied the set)");
}

}  // namespace sparse_bandit
