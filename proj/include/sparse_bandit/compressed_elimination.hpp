#pragma once

// Rounds of G-optimal estimation and action elimination in compressed space.

#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/g_optimal_design.hpp"
#include "sparse_bandit/jl_compression.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace sparse_bandit {

struct BenignOptions {
  double c_const = 2.0;
  /// Rows of the instance forming the action list (duplicates allowed).
  /// Empty means every row in order.
  std::vector<Index> actions;
  DesignOptions design;
  /// Noisy schedule: round l (1-based) draws ceil(rho(a) * 2^(l-1) * base)
  /// samples of each support action, base = pull_base * |support|.
  double pull_base = 1.0;
  /// A shrunken active set spans some directions weakly or not at all, and
  /// its design amplifies misspecification along them without bound for the
  /// eliminated rows. On: after the first round, only directions whose singular
  /// value is at least identified_fraction of the largest take the fresh
  /// estimate; the rest keep the previous round's value. Off: literal output.
  bool inherit_unidentified = true;
  double identified_fraction = 0.1;
};

struct BenignRound {
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  double threshold = 0.0;
  double g_value = 0.0;
  std::size_t support = 0;
  std::size_t cumulative_queries = 0;
};

struct BenignResult {
  Vector theta;                // theta_f in R^p
  std::vector<Index> active;   // positions in the action list
  std::vector<Index> action_rows;  // instance row of each action-list entry
  std::vector<BenignRound> rounds;
  std::vector<std::vector<Index>> active_history;  // active set entering each round
  std::size_t queries = 0;
  enum class Stop { kBudget, kSingleton, kFixedPoint } stop = Stop::kBudget;
};

/// C (log k)^{1/4} sqrt(eps).
inline double benign_threshold(double c_const, double k, double epsilon) {
  return c_const * std::pow(std::log(k), 0.25) * std::sqrt(epsilon);
}

/// C ((log k)^{1/4} sqrt(eps) + sqrt((p / t) log(k n))).
inline double noisy_benign_threshold(double c_const, double k, double epsilon, double p, double t, double n) {
  return c_const * (std::pow(std::log(k), 0.25) * std::sqrt(epsilon) + std::sqrt(p / t * std::log(k * n)));
}

/// log(k) <= eps^2 s^{2(1+delta)}, with log(k) passed directly.
inline bool corollary_regime_check(Index s, double delta, double epsilon, double log_k) {
  if (!(delta >= 1.0)) throw ValidationError("regime delta", "delta must be >= 1");
  return log_k <= epsilon * epsilon * std::pow(static_cast<double>(s), 2.0 * (1.0 + delta));
}

namespace detail {

/// P fresh + (I - P) previous, P the projector onto the right singular
/// vectors of `rows` with singular value above fraction * largest.
inline Vector merge_unidentified(const Matrix& rows, const Vector& fresh, const Vector& previous, double fraction) {
  Eigen::JacobiSVD<Matrix> svd(rows, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > fraction * sv(0)) ++rank;
  const Matrix basis = svd.matrixV().leftCols(rank);
  return previous + basis * (basis.transpose() * (fresh - previous));
}

}  // namespace detail

/// Runs elimination on the compressed action list f(a). The map must already
/// be certified by the caller; theta* is never read here.
inline BenignResult run_benign_elimination(const BanditInstance& instance, const CompressionMap& map, std::size_t budget,
                                           QueryLedger& ledger, const BenignOptions& opt = {}) {
  if (map.d != instance.d()) throw ValidationError("dimension mismatch", "map input dimension differs from d");
  if (budget < 1) throw ValidationError("query budget", "budget must be >= 1");
  BenignResult res;
  res.action_rows = opt.actions;
  if (res.action_rows.empty()) {
    res.action_rows.resize(instance.k());
    std::iota(res.action_rows.begin(), res.action_rows.end(), Index{0});
  }
  for (Index r : res.action_rows) {
    if (r >= instance.k()) throw ValidationError("action list", "row index out of range");
  }
  const Matrix full = restrict_rows(instance.features().matrix(), res.action_rows);
  const Matrix compressed = map.apply_rows(full);
  const double k = static_cast<double>(res.action_rows.size());
  const double eps = instance.epsilon();
  const double n = static_cast<double>(budget);
  const bool noisy = instance.noise().kind != NoiseModel::Kind::kNone;
  const std::size_t start = ledger.size();

  res.active.resize(res.action_rows.size());
  std::iota(res.active.begin(), res.active.end(), Index{0});
  bool first = true;

  for (std::size_t round = 1;; ++round) {
    const std::size_t used = ledger.size() - start;
    const Matrix rows = restrict_rows(compressed, res.active);
    const DesignDistribution design = frank_wolfe_design(rows, opt.design);
    const std::size_t remaining = budget - used;
    if (design.support.size() > remaining) {
      if (first) {
        throw ValidationError("query budget", "budget " + std::to_string(budget) + " is below one design's support size " +
                                                  std::to_string(design.support.size()));
      }
      res.stop = BenignResult::Stop::kBudget;
      break;
    }

    std::vector<double> rewards;
    rewards.reserve(design.support.size());
    if (!noisy) {
      for (const auto& [i, w] : design.support) rewards.push_back(query(instance, res.action_rows[res.active[i]], ledger));
    } else {
      // Doubling schedule scaled down to fit the remaining budget.
      double scale = std::ldexp(opt.pull_base * static_cast<double>(design.support.size()), static_cast<int>(round) - 1);
      auto pulls_for = [&](double sc) {
        std::vector<std::size_t> pulls;
        std::size_t total = 0;
        for (const auto& [i, w] : design.support) {
          pulls.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w * sc))));
          total += pulls.back();
        }
        return std::pair{pulls, total};
      };
      auto [pulls, total] = pulls_for(scale);
      while (total > remaining && scale > 1.0) {
        scale = std::floor(scale / 2.0);
        std::tie(pulls, total) = pulls_for(scale);
      }
      if (total > remaining) {
        res.stop = BenignResult::Stop::kBudget;
        break;
      }
      for (std::size_t j = 0; j < design.support.size(); ++j) {
        const Index row = res.action_rows[res.active[design.support[j].first]];
        double sum = 0.0;
        for (std::size_t c = 0; c < pulls[j]; ++c) sum += query(instance, row, ledger);
        rewards.push_back(sum / static_cast<double>(pulls[j]));
      }
    }
    Vector estimate = design_estimate(rows, design, rewards);
    if (opt.inherit_unidentified && !first) {
      estimate = detail::merge_unidentified(rows, estimate, res.theta, opt.identified_fraction);
    }
    res.theta = std::move(estimate);
    first = false;

    const std::size_t t = ledger.size() - start;
    const double threshold = noisy ? noisy_benign_threshold(opt.c_const, k, eps, static_cast<double>(map.p),
                                                            static_cast<double>(t), n)
                                   : benign_threshold(opt.c_const, k, eps);
    const Vector values = rows * res.theta;
    const double best = values.maxCoeff();
    std::vector<Index> next;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (best - values(i) <= threshold) next.push_back(res.active[static_cast<std::size_t>(i)]);
    }
    res.active_history.push_back(res.active);
    res.rounds.push_back({res.active.size(), next.size(), threshold, design.g_value, design.support.size(), t});
    const bool unchanged = next.size() == res.active.size();
    res.active = std::move(next);
    if (res.active.size() <= 1) {
      res.stop = BenignResult::Stop::kSingleton;
      break;
    }
    // Noiseless rewards make a repeated round identical; noisy rounds keep
    // sharpening as t grows, so only the budget stops them.
    if (unchanged && !noisy) {
      res.stop = BenignResult::Stop::kFixedPoint;
      break;
    }
    if (ledger.size() - start >= budget) {
      res.stop = BenignResult::Stop::kBudget;
      break;
    }
  }
  res.queries = ledger.size() - start;
  return res;
}

/// max over the listed rows of |r_a - <f(a), theta_f>| (harness-side).
inline double compressed_uniform_error(const BanditInstance& instance, const CompressionMap& map, const Vector& theta_f,
                                       const std::vector<Index>& rows) {
  double worst = 0.0;
  const Vector ft = map.matrix.transpose() * theta_f;
  for (Index r : rows) {
    const double pred = instance.features().matrix().row(static_cast<Eigen::Index>(r)).dot(ft);
    worst = std::max(worst, std::abs(instance.rewards()(static_cast<Eigen::Index>(r)) - pred));
  }
  return worst;
}

inline double compressed_uniform_error(const BanditInstance& instance, const CompressionMap& map, const Vector& theta_f) {
  std::vector<Index> rows(instance.k());
  std::iota(rows.begin(), rows.end(), Index{0});
  return compressed_uniform_error(instance, map, theta_f, rows);
}

}  // namespace sparse_bandit
