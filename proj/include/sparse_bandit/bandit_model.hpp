#pragma once

// Misspecified sparse linear bandit environment: r_i = <a_i, theta*> + nu_i.

#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/core.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sparse_bandit {

/// k x d matrix whose rows are the action features; every row has norm <= 1.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  explicit FeatureMatrix(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1) {
      throw ValidationError("feature matrix shape", "need k >= 1 and d >= 1");
    }
    for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
      const double norm = rows_.row(i).norm();
      if (!std::isfinite(norm) || norm > 1.0 + kNormTolerance) {
        throw ValidationError("feature row norm",
                              "row " + std::to_string(i) + " has norm " + std::to_string(norm) + " > 1");
      }
    }
  }

  Index k() const { return static_cast<Index>(rows_.rows()); }
  Index d() const { return static_cast<Index>(rows_.cols()); }
  const Matrix& matrix() const { return rows_; }
  Eigen::RowVectorXd row(Index i) const { return rows_.row(static_cast<Eigen::Index>(i)); }

 private:
  Matrix rows_;
};

enum class NormCheck { kEnforce, kSkip };

/// Exactly s-sparse parameter with ||theta||_2 <= 1 (the norm check can be
/// skipped for lower-bound embeddings, which scale theta by 2*Delta).
class SparseParameter {
 public:
  SparseParameter() = default;

  SparseParameter(Vector coords, Index s, NormCheck check = NormCheck::kEnforce)
      : coords_(std::move(coords)), s_(s) {
    for (Eigen::Index j = 0; j < coords_.size(); ++j) {
      if (!std::isfinite(coords_(j))) throw ValidationError("theta finite", "non-finite coordinate");
      if (coords_(j) != 0.0) support_.push_back(static_cast<Index>(j));
    }
    if (support_.size() != s_) {
      throw ValidationError("theta sparsity", "||theta||_0 = " + std::to_string(support_.size()) +
                                                  " but s = " + std::to_string(s_));
    }
    norm_exceeded_ = coords_.norm() > 1.0 + kNormTolerance;
    if (check == NormCheck::kEnforce && norm_exceeded_) {
      throw ValidationError("theta norm", "||theta||_2 = " + std::to_string(coords_.norm()) + " > 1");
    }
  }

  const Vector& coords() const { return coords_; }
  const IndexSet& support() const { return support_; }
  Index s() const { return s_; }
  Index d() const { return static_cast<Index>(coords_.size()); }
  bool norm_exceeded() const { return norm_exceeded_; }

 private:
  Vector coords_;
  IndexSet support_;
  Index s_ = 0;
  bool norm_exceeded_ = false;
};

struct NoiseModel {
  enum class Kind { kNone, kGaussian };
  Kind kind = Kind::kNone;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// Extra data carried by lower-bound (index-query) instances.
struct HardInstanceInfo {
  double orthogonality = 0.0;  // certified bound on pairwise |<a_i, a_j>|
  Index target = 0;            // planted index i*
  double gap = 0.0;            // Delta
};

class BanditInstance {
 public:
  const FeatureMatrix& features() const { return features_; }
  const SparseParameter& theta_star() const { return theta_; }
  const Vector& misspec() const { return misspec_; }
  double epsilon() const { return epsilon_; }
  const NoiseModel& noise() const { return noise_; }
  /// Deterministic reward table <a_i, theta*> + nu_i.
  const Vector& rewards() const { return rewards_; }
  const std::optional<HardInstanceInfo>& hard_info() const { return hard_; }

  Index k() const { return features_.k(); }
  Index d() const { return features_.d(); }
  Index s() const { return theta_.s(); }

 private:
  friend BanditInstance build_instance(FeatureMatrix, SparseParameter, Vector, double, NoiseModel,
                                       std::optional<HardInstanceInfo>);
  FeatureMatrix features_;
  SparseParameter theta_;
  Vector misspec_;
  double epsilon_ = 0.0;
  NoiseModel noise_;
  Vector rewards_;
  std::optional<HardInstanceInfo> hard_;
};

inline BanditInstance build_instance(FeatureMatrix features, SparseParameter theta_star, Vector misspec,
                                     double epsilon, NoiseModel noise = {},
                                     std::optional<HardInstanceInfo> hard = std::nullopt) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("epsilon positive", "epsilon must be a positive finite real");
  }
  if (theta_star.d() != features.d()) {
    throw ValidationError("dimension mismatch", "theta has " + std::to_string(theta_star.d()) +
                                                    " coordinates, features have d = " +
                                                    std::to_string(features.d()));
  }
  if (static_cast<Index>(misspec.size()) != features.k()) {
    throw ValidationError("dimension mismatch", "misspecification vector has length " +
                                                    std::to_string(misspec.size()) + ", expected k = " +
                                                    std::to_string(features.k()));
  }
  if (misspec.size() > 0 && !(misspec.cwiseAbs().maxCoeff() <= epsilon)) {
    throw ValidationError("misspecification exceeds epsilon",
                          "max |nu| = " + std::to_string(misspec.cwiseAbs().maxCoeff()) + " > epsilon = " +
                              std::to_string(epsilon));
  }
  if (noise.kind == NoiseModel::Kind::kGaussian && !(noise.scale > 0.0)) {
    throw ValidationError("noise scale", "gaussian noise needs a positive scale");
  }
  BanditInstance inst;
  inst.rewards_ = features.matrix() * theta_star.coords() + misspec;
  inst.features_ = std::move(features);
  inst.theta_ = std::move(theta_star);
  inst.misspec_ = std::move(misspec);
  inst.epsilon_ = epsilon;
  inst.noise_ = noise;
  inst.hard_ = hard;
  return inst;
}

struct LedgerEntry {
  Index action;
  double reward;
  std::uint64_t tick;
};

/// Append-only record of every environment interaction.
class QueryLedger {
 public:
  void append(Index action, double reward) {
    entries_.push_back({action, reward, static_cast<std::uint64_t>(entries_.size())});
  }
  std::size_t size() const { return entries_.size(); }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

  /// Concatenate another run's entries (ticks renumbered), for merging
  /// per-subset ledgers after independent estimation.
  void merge(const QueryLedger& other) {
    for (const auto& e : other.entries_) append(e.action, e.reward);
  }

 private:
  std::vector<LedgerEntry> entries_;
};

/// One fresh N(0, scale^2) draw keyed by (seed, tick), so a run's noise
/// stream is reproducible and independent of any other run's ledger.
inline double noise_draw(const NoiseModel& noise, std::uint64_t tick) {
  // splitmix64 finaliser over the pair, then a generator seeded with the result.
  std::uint64_t z = noise.seed * 0x9E3779B97F4A7C15ULL + tick + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  std::mt19937_64 gen(z);
  std::normal_distribution<double> dist(0.0, noise.scale);
  return dist(gen);
}

inline double query(const BanditInstance& instance, Index index, QueryLedger& ledger) {
  if (index >= instance.k()) {
    throw std::out_of_range("action index " + std::to_string(index) + " out of range [0, " +
                            std::to_string(instance.k()) + ")");
  }
  double reward = instance.rewards()(static_cast<Eigen::Index>(index));
  if (instance.noise().kind == NoiseModel::Kind::kGaussian) {
    reward += noise_draw(instance.noise(), ledger.size());
  }
  ledger.append(index, reward);
  return reward;
}

struct BestAction {
  Index index;
  double reward;
};

/// Exhaustive argmax of the reward table; ties go to the lowest index.
inline BestAction brute_force_best(const BanditInstance& instance) {
  const Vector& r = instance.rewards();
  BestAction best{0, r(0)};
  for (Eigen::Index i = 1; i < r.size(); ++i) {
    if (r(i) > best.reward) best = {static_cast<Index>(i), r(i)};
  }
  return best;
}

/// max_a |r_a - <a_L, theta_L>| over every row.
inline double uniform_error(const BanditInstance& instance, std::span<const Index> index_set,
                            const Vector& theta_restricted) {
  if (static_cast<Index>(theta_restricted.size()) != index_set.size()) {
    throw ValidationError("dimension mismatch", "estimate length differs from index set size");
  }
  for (Index j : index_set) {
    if (j >= instance.d()) throw ValidationError("dimension mismatch", "index set outside [d]");
  }
  const Vector predictions = restrict_columns(instance.features().matrix(), index_set) * theta_restricted;
  return (instance.rewards() - predictions).cwiseAbs().maxCoeff();
}

/// Same as above for a full d-dimensional estimate.
inline double uniform_error(const BanditInstance& instance, const Vector& theta_full) {
  if (static_cast<Index>(theta_full.size()) != instance.d()) {
    throw ValidationError("dimension mismatch", "estimate must have d coordinates");
  }
  return (instance.rewards() - instance.features().matrix() * theta_full).cwiseAbs().maxCoeff();
}

/// Reward gap between the best action and `chosen`.
inline double suboptimality(const BanditInstance& instance, Index chosen) {
  return brute_force_best(instance).reward - instance.rewards()(static_cast<Eigen::Index>(chosen));
}

/// Action maximising the predicted reward <a_L, theta_L>, lowest index on ties.
inline Index greedy_action(const Matrix& features, std::span<const Index> index_set, const Vector& theta) {
  const Vector pred = restrict_columns(features, index_set) * theta;
  Index best = 0;
  for (Eigen::Index i = 1; i < pred.size(); ++i) {
    if (pred(i) > pred(static_cast<Eigen::Index>(best))) best = static_cast<Index>(i);
  }
  return best;
}

}  // namespace sparse_bandit
