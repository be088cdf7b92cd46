#pragma once

// Sparse near-orthogonal feature matrices (random sparse Gaussian rows,
// normalised and certified exhaustively) and the planted-index embedding.

#include "sparse_bandit/bandit_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace sparse_bandit {

inline constexpr double kThresholdSaturation = 1e9;
inline constexpr std::size_t kHardRetries = 100;

struct HardMatrixSpec {
  Index k = 1;
  Index d = 1;
  Index s = 1;
  double epsilon = 0.5;  // pairwise orthogonality level
  double tau = 0.1;
  double delta = 0.25;
  double c = 2.0;
  std::uint64_t seed = 0;
};

inline void check_spec(const HardMatrixSpec& spec) {
  if (spec.k < 1 || spec.d < 1 || spec.s < 1 || spec.s > spec.d) {
    throw ValidationError("hard spec shape", "need k >= 1 and 1 <= s <= d");
  }
  if (!(spec.epsilon > 0.0)) throw ValidationError("hard spec epsilon", "epsilon must be positive");
  if (!(spec.tau >= 0.0 && spec.tau < 1.0)) throw ValidationError("hard spec tau", "tau must lie in [0, 1)");
  if (!(spec.delta > 0.0 && spec.delta <= 1.0)) throw ValidationError("hard spec delta", "delta must lie in (0, 1]");
  if (!(spec.c > 1.0)) throw ValidationError("hard spec c", "c must exceed 1");
}

/// C' = 2 c^3 / ((1 + tau) sqrt(c^2 - 1)).
inline double c_prime(double tau, double c) { return 2.0 * c * c * c / ((1.0 + tau) * std::sqrt(c * c - 1.0)); }

inline bool small_epsilon_regime(const HardMatrixSpec& spec) {
  return spec.epsilon <= c_prime(spec.tau, spec.c) * static_cast<double>(spec.s) / static_cast<double>(spec.d);
}

struct KThreshold {
  std::uint64_t k = 1;
  bool saturated = false;
  bool small_regime = true;
  double exponent = 0.0;
};

/// Row count at which the construction is guaranteed: ceil(sqrt(delta) exp(x)),
/// x = d (1+tau) eps^2 / (4 C') for small eps, s (1+tau) eps / 4 otherwise.
inline KThreshold k_threshold(const HardMatrixSpec& spec) {
  check_spec(spec);
  KThreshold out;
  out.small_regime = small_epsilon_regime(spec);
  out.exponent = out.small_regime ? static_cast<double>(spec.d) * (1.0 + spec.tau) * spec.epsilon * spec.epsilon /
                                        (4.0 * c_prime(spec.tau, spec.c))
                                  : static_cast<double>(spec.s) * (1.0 + spec.tau) * spec.epsilon / 4.0;
  const double raw = std::ceil(std::sqrt(spec.delta) * std::exp(out.exponent));
  if (!(raw <= kThresholdSaturation)) {
    out.saturated = true;
    out.k = static_cast<std::uint64_t>(kThresholdSaturation);
  } else {
    out.k = static_cast<std::uint64_t>(std::max(1.0, raw));
  }
  return out;
}

namespace detail {

/// One row: each entry nonzero with probability s/d, then N(0, 1/s).
/// All-zero rows are redrawn.
inline Vector sparse_gaussian_row(std::mt19937_64& gen, Index d, Index s) {
  std::bernoulli_distribution keep(static_cast<double>(s) / static_cast<double>(d));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(s)));
  Vector row(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = keep(gen) ? normal(gen) : 0.0;
  } while ((row.array() == 0.0).all());
  return row;
}

inline Index l0(const Vector& v) { return static_cast<Index>((v.array() != 0.0).count()); }

}  // namespace detail

inline Matrix sample_raw_matrix(const HardMatrixSpec& spec) {
  check_spec(spec);
  std::mt19937_64 gen(spec.seed);
  Matrix raw(static_cast<Eigen::Index>(spec.k), static_cast<Eigen::Index>(spec.d));
  for (Eigen::Index i = 0; i < raw.rows(); ++i) raw.row(i) = detail::sparse_gaussian_row(gen, spec.d, spec.s).transpose();
  return raw;
}

struct RejectionReport {
  std::uint64_t seed = 0;
  std::size_t sparsity_failures = 0;  // rows with ||a||_0 > s + tau
  std::size_t norm_failures = 0;      // rows with | ||a||^2 - 1 | > tau
  std::size_t pair_failures = 0;      // pairs with |<a_i, a_j>| > eps after normalising
  bool accepted() const { return sparsity_failures == 0 && norm_failures == 0 && pair_failures == 0; }
};

struct ValidatedMatrix {
  Matrix normalized;
  RejectionReport report;
};

/// Normalises rows and checks all three conditions exhaustively.
inline ValidatedMatrix normalize_and_validate(const Matrix& raw, const HardMatrixSpec& spec) {
  ValidatedMatrix out;
  out.report.seed = spec.seed;
  out.normalized = raw;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const Vector row = raw.row(i).transpose();
    const double sq = row.squaredNorm();
    if (sq == 0.0) throw ValidationError("nonzero rows", "row " + std::to_string(i) + " is zero");
    if (static_cast<double>(detail::l0(row)) > static_cast<double>(spec.s) + spec.tau) ++out.report.sparsity_failures;
    if (std::abs(sq - 1.0) > spec.tau) ++out.report.norm_failures;
    out.normalized.row(i) /= std::sqrt(sq);
  }
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < raw.rows(); ++j) {
      if (std::abs(out.normalized.row(i).dot(out.normalized.row(j))) > spec.epsilon) ++out.report.pair_failures;
    }
  }
  return out;
}

/// kWholeMatrix retries the whole draw with the next seed. kResampleRows
/// draws rows one at a time and rejects any row that fails a condition
/// against the rows kept so far; the result satisfies the same certificate
/// but the row distribution is conditioned on acceptance.
enum class GenerationPolicy { kWholeMatrix, kResampleRows };

struct GeneratedMatrix {
  FeatureMatrix matrix;
  std::uint64_t seed = 0;
  std::size_t attempts = 0;  // whole-matrix draws, or row draws
  std::vector<RejectionReport> rejections;
};

inline GeneratedMatrix generate_hard_matrix(const HardMatrixSpec& spec, GenerationPolicy policy = GenerationPolicy::kWholeMatrix,
                                            std::size_t max_retries = kHardRetries) {
  check_spec(spec);
  GeneratedMatrix out;
  if (policy == GenerationPolicy::kWholeMatrix) {
    for (std::size_t a = 0; a < max_retries; ++a) {
      HardMatrixSpec attempt = spec;
      attempt.seed = spec.seed + a;
      auto v = normalize_and_validate(sample_raw_matrix(attempt), attempt);
      out.attempts = a + 1;
      if (v.report.accepted()) {
        out.matrix = FeatureMatrix(std::move(v.normalized));
        out.seed = attempt.seed;
        return out;
      }
      out.rejections.push_back(v.report);
    }
    throw ConvergenceError("no certified matrix in " + std::to_string(max_retries) + " seeds", 0.0);
  }

  std::mt19937_64 gen(spec.seed);
  const std::size_t max_draws = max_retries * 1000 * static_cast<std::size_t>(spec.k);
  Matrix rows(static_cast<Eigen::Index>(spec.k), static_cast<Eigen::Index>(spec.d));
  Eigen::Index kept = 0;
  RejectionReport tally;
  tally.seed = spec.seed;
  while (kept < rows.rows()) {
    if (out.attempts >= max_draws) {
      throw ConvergenceError("row resampling exceeded " + std::to_string(max_draws) + " draws", static_cast<double>(kept));
    }
    ++out.attempts;
    const Vector row = detail::sparse_gaussian_row(gen, spec.d, spec.s);
    const double sq = row.squaredNorm();
    if (static_cast<double>(detail::l0(row)) > static_cast<double>(spec.s) + spec.tau) {
      ++tally.sparsity_failures;
      continue;
    }
    if (std::abs(sq - 1.0) > spec.tau) {
      ++tally.norm_failures;
      continue;
    }
    const Vector unit = row / std::sqrt(sq);
    bool ok = true;
    for (Eigen::Index i = 0; i < kept && ok; ++i) ok = std::abs(rows.row(i).dot(unit)) <= spec.epsilon;
    if (!ok) {
      ++tally.pair_failures;
      continue;
    }
    rows.row(kept++) = unit.transpose();
  }
  out.rejections.push_back(tally);
  out.matrix = FeatureMatrix(std::move(rows));
  out.seed = spec.seed;
  return out;
}

/// Exhaustive certificate for an already normalised matrix.
inline RejectionReport certify_hard_matrix(const FeatureMatrix& m, Index s, double epsilon) {
  RejectionReport rep;
  const Matrix& a = m.matrix();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (std::abs(a.row(i).norm() - 1.0) > kNormTolerance) ++rep.norm_failures;
    if (detail::l0(a.row(i).transpose()) > s) ++rep.sparsity_failures;
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
      if (std::abs(a.row(i).dot(a.row(j))) > epsilon) ++rep.pair_failures;
    }
  }
  return rep;
}

struct ConditionRates {
  std::size_t trials = 0;
  double sparsity = 0.0;  // fraction of matrices with any sparsity failure
  double norm = 0.0;
  double pairwise = 0.0;
  // Matrix-level budgets from the per-row (delta / k) and per-pair
  // (2 delta / k^2) failure probabilities, summed over rows and pairs.
  double sparsity_budget = 0.0;
  double norm_budget = 0.0;
  double pairwise_budget = 0.0;
};

inline ConditionRates condition_failure_rates(const HardMatrixSpec& spec, std::uint64_t first_seed, std::size_t trials) {
  ConditionRates out;
  out.trials = trials;
  std::size_t sp = 0, nm = 0, pr = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    HardMatrixSpec attempt = spec;
    attempt.seed = first_seed + t;
    const auto rep = normalize_and_validate(sample_raw_matrix(attempt), attempt).report;
    sp += rep.sparsity_failures > 0;
    nm += rep.norm_failures > 0;
    pr += rep.pair_failures > 0;
  }
  const double n = static_cast<double>(trials);
  const double k = static_cast<double>(spec.k);
  out.sparsity = static_cast<double>(sp) / n;
  out.norm = static_cast<double>(nm) / n;
  out.pairwise = static_cast<double>(pr) / n;
  out.sparsity_budget = spec.delta;
  out.norm_budget = spec.delta;
  out.pairwise_budget = spec.delta * (k - 1.0) / k;
  return out;
}

/// theta* = 2 Delta a_{i*}; rewards 2 Delta e_{i*}; nu = rewards - Phi theta*.
/// `epsilon` is the misspecification level; the matrix must be certified at
/// epsilon / (2 Delta) for the nu check to pass.
inline BanditInstance embed_index_query(const FeatureMatrix& validated, Index i_star, double gap, double epsilon) {
  if (i_star >= validated.k()) throw ValidationError("hard target index", "i* out of range");
  if (!(gap > 0.0)) throw ValidationError("hard gap", "Delta must be positive");
  const Vector a = validated.row(i_star).transpose();
  const Vector theta = 2.0 * gap * a;
  const Index s = detail::l0(theta);
  Vector target = Vector::Zero(static_cast<Eigen::Index>(validated.k()));
  target(static_cast<Eigen::Index>(i_star)) = 2.0 * gap;
  Vector nu = target - validated.matrix() * theta;
  // ||a_{i*}|| = 1 only up to rounding; the target carries no misspecification.
  nu(static_cast<Eigen::Index>(i_star)) = 0.0;
  HardInstanceInfo info{epsilon / (2.0 * gap), i_star, gap};
  return build_instance(validated, SparseParameter(theta, s, NormCheck::kSkip), std::move(nu), epsilon, NoiseModel{},
                        info);
}

struct SearchOutcome {
  Index found = 0;
  std::size_t queries = 0;
};

/// Queries actions in a seeded uniformly random order (without replacement)
/// until one returns at least `target_reward` (Delta on a planted instance).
inline SearchOutcome random_search(const BanditInstance& instance, double target_reward, std::uint64_t seed,
                                   QueryLedger& ledger) {
  std::vector<Index> order(instance.k());
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  SearchOutcome out;
  const std::size_t start = ledger.size();
  for (Index i : order) {
    if (query(instance, i, ledger) >= target_reward) {
      out.found = i;
      out.queries = ledger.size() - start;
      return out;
    }
  }
  out.found = order.back();
  out.queries = ledger.size() - start;
  return out;
}

struct ProbePoint {
  Index k = 0;
  double mean_queries = 0.0;
  std::size_t min_queries = 0;
  std::size_t max_queries = 0;
};

struct ProbeCurve {
  std::vector<ProbePoint> points;
  bool non_decreasing = true;
};

using QueryCounter = std::function<std::size_t(const BanditInstance&, std::uint64_t)>;

/// Mean queries of `algorithm` over `trials` seeds for each instance, in the
/// order given (callers pass a family with increasing k). Trend only.
inline ProbeCurve hardness_probe(const std::vector<BanditInstance>& family, const QueryCounter& algorithm, std::size_t trials) {
  ProbeCurve curve;
  for (const auto& inst : family) {
    ProbePoint p;
    p.k = inst.k();
    p.min_queries = static_cast<std::size_t>(-1);
    double total = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t q = algorithm(inst, t);
      total += static_cast<double>(q);
      p.min_queries = std::min(p.min_queries, q);
      p.max_queries = std::max(p.max_queries, q);
    }
    p.mean_queries = trials ? total / static_cast<double>(trials) : 0.0;
    if (!curve.points.empty() && p.mean_queries < curve.points.back().mean_queries) curve.non_decreasing = false;
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace sparse_bandit
