#pragma once

// Parameter elimination over (centre w, index set M, net estimate theta_M)
// triples. Exponential in s by construction; guarded at desk scale.

#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/combinatorics.hpp"
#include "sparse_bandit/covering_net.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace sparse_bandit {

inline constexpr std::uint64_t kMaxCandidateTriples = 10'000'000;

struct ParamEliminationOptions {
  std::uint64_t net_seed = 0;
  std::optional<std::size_t> pool_size;
  /// Use this net for the estimates instead of building one (lets a harness
  /// seed the net with the ground truth through include_point).
  std::optional<CoveringNet> net;
  /// For s = 1 the sphere S^0 = {-1, +1} cannot centre groups around interior
  /// coordinates, so centres range over an eps/2-spaced grid of [-1, 1]. Set
  /// to false to use the net itself as the centre set for every s.
  bool line_centres_cover_interval = true;
  std::uint64_t max_triples = kMaxCandidateTriples;
  /// Also let families on the same subset act as rivals (M' = M, different
  /// estimate). Without this a wrong estimate on the true subset is never
  /// challenged by the true family. Off reproduces the M != M' condition.
  bool same_subset_rivals = true;
};

/// All candidate triples, stored implicitly. Triple t decodes as
/// family = t / |centres|, centre = t % |centres|, and family f as
/// subset = f / |net|, estimate = f % |net|; this is the construction (and
/// scan) order: subsets lexicographic, then net index, then centre index.
class CandidateSet {
 public:
  CandidateSet(const Matrix& features, double epsilon, Index s, CoveringNet net, std::vector<Vector> centres)
      : epsilon_(epsilon),
        subsets_(all_subsets(static_cast<Index>(features.cols()), s)),
        net_(std::move(net)),
        centres_(std::move(centres)) {
    const Index k = static_cast<Index>(features.rows());
    const Index families = subsets_.size() * net_.size();
    predictions_.resize(static_cast<Eigen::Index>(families), static_cast<Eigen::Index>(k));
    centre_values_.resize(static_cast<Eigen::Index>(families), static_cast<Eigen::Index>(centres_.size()));
    for (Index m = 0; m < subsets_.size(); ++m) {
      const Matrix restricted = restrict_columns(features, subsets_[m]);
      for (Index e = 0; e < net_.size(); ++e) {
        const auto f = static_cast<Eigen::Index>(m * net_.size() + e);
        predictions_.row(f) = (restricted * net_.points[e]).transpose();
        for (Index c = 0; c < centres_.size(); ++c) {
          centre_values_(f, static_cast<Eigen::Index>(c)) = centres_[c].dot(net_.points[e]);
        }
      }
    }
    alive_.assign(families, true);
    alive_count_ = families;
    subset_max_ = Matrix::Constant(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(subsets_.size()),
                                   -std::numeric_limits<double>::infinity());
    subset_min_ = Matrix::Constant(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(subsets_.size()),
                                   std::numeric_limits<double>::infinity());
    for (Index m = 0; m < subsets_.size(); ++m) refresh_subset(m);
    refresh_extremes();
  }

  double epsilon() const { return epsilon_; }
  Index k() const { return static_cast<Index>(predictions_.cols()); }
  const std::vector<IndexSet>& subsets() const { return subsets_; }
  const CoveringNet& net() const { return net_; }
  const std::vector<Vector>& centres() const { return centres_; }

  std::size_t family_count() const { return alive_.size(); }
  std::size_t triple_count() const { return alive_.size() * centres_.size(); }
  std::size_t alive_families() const { return alive_count_; }
  std::size_t alive_triples() const { return alive_count_ * centres_.size(); }

  Index family_of(Index triple) const { return triple / centres_.size(); }
  Index centre_of(Index triple) const { return triple % centres_.size(); }
  Index subset_of_family(Index family) const { return family / net_.size(); }
  Index estimate_of_family(Index family) const { return family % net_.size(); }
  bool alive(Index family) const { return alive_[family]; }

  /// <x_M, theta_M> for family (M, theta_M) and action x.
  double prediction(Index family, Index action) const {
    return predictions_(static_cast<Eigen::Index>(family), static_cast<Eigen::Index>(action));
  }
  /// <w, theta_M> for the triple's centre.
  double centre_value(Index triple) const {
    return centre_values_(static_cast<Eigen::Index>(family_of(triple)), static_cast<Eigen::Index>(centre_of(triple)));
  }
  /// x in R^w_M(theta_M)  <=>  |theta_M^T (x_M - w)| <= eps / 2.
  bool in_group(Index triple, Index action) const {
    return std::abs(prediction(family_of(triple), action) - centre_value(triple)) <= epsilon_ / 2.0;
  }
  std::vector<Index> group(Index triple) const {
    std::vector<Index> out;
    for (Index x = 0; x < k(); ++x) {
      if (in_group(triple, x)) out.push_back(x);
    }
    return out;
  }

  /// Removes every triple carrying this (M, theta_M) pair.
  void remove_family(Index family) {
    if (!alive_[family]) return;
    alive_[family] = false;
    --alive_count_;
    refresh_subset(subset_of_family(family));
    refresh_extremes();
  }

  /// Max / min alive prediction at x over families whose subset differs from `subset`.
  /// Pass subset = subsets().size() to include every subset.
  double rival_max(Index action, Index subset) const {
    const auto& e = max_top_[action];
    return e.first_subset != subset ? e.first : e.second;
  }
  double rival_min(Index action, Index subset) const {
    const auto& e = min_top_[action];
    return e.first_subset != subset ? e.first : e.second;
  }

 private:
  struct TopTwo {
    double first;
    Index first_subset;
    double second;
  };

  void refresh_subset(Index m) {
    const Index n = net_.size();
    for (Index x = 0; x < k(); ++x) {
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      for (Index e = 0; e < n; ++e) {
        const Index f = m * n + e;
        if (!alive_[f]) continue;
        const double p = prediction(f, x);
        hi = std::max(hi, p);
        lo = std::min(lo, p);
      }
      subset_max_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(m)) = hi;
      subset_min_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(m)) = lo;
    }
  }

  void refresh_extremes() {
    const double inf = std::numeric_limits<double>::infinity();
    max_top_.assign(k(), TopTwo{-inf, subsets_.size(), -inf});
    min_top_.assign(k(), TopTwo{inf, subsets_.size(), inf});
    for (Index x = 0; x < k(); ++x) {
      auto& hi = max_top_[x];
      auto& lo = min_top_[x];
      for (Index m = 0; m < subsets_.size(); ++m) {
        const double vmax = subset_max_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(m));
        const double vmin = subset_min_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(m));
        if (vmax > hi.first) {
          hi.second = hi.first;
          hi.first = vmax;
          hi.first_subset = m;
        } else if (vmax > hi.second) {
          hi.second = vmax;
        }
        if (vmin < lo.first) {
          lo.second = lo.first;
          lo.first = vmin;
          lo.first_subset = m;
        } else if (vmin < lo.second) {
          lo.second = vmin;
        }
      }
    }
  }

  double epsilon_;
  std::vector<IndexSet> subsets_;
  CoveringNet net_;
  std::vector<Vector> centres_;
  Matrix predictions_;    // families x k
  Matrix centre_values_;  // families x |centres|
  std::vector<bool> alive_;
  std::size_t alive_count_ = 0;
  Matrix subset_max_;  // k x subsets, over alive families
  Matrix subset_min_;
  std::vector<TopTwo> max_top_;
  std::vector<TopTwo> min_top_;
};

/// Centres for the groups R^w_M: the net itself, or for s = 1 (when enabled)
/// the grid -1, -1 + eps/2, ..., 1.
inline std::vector<Vector> group_centres(const CoveringNet& net, double epsilon, bool line_cover) {
  if (net.dim == 1 && line_cover) {
    std::vector<Vector> out;
    const double step = epsilon / 2.0;
    const auto n = static_cast<std::size_t>(std::floor(2.0 / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(Vector::Constant(1, -1.0 + static_cast<double>(i) * step));
    if (out.back()(0) < 1.0 - 1e-12) out.push_back(Vector::Constant(1, 1.0));
    return out;
  }
  return net.points;
}

inline std::uint64_t triple_count(Index d, Index s, std::size_t net_size, std::size_t centre_count) {
  const std::uint64_t subsets = binomial(d, s);
  const long double total = static_cast<long double>(subsets) * net_size * centre_count;
  return total > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())
             ? std::numeric_limits<std::uint64_t>::max()
             : static_cast<std::uint64_t>(total);
}

/// Builds the candidate collection with its per-triple action groups.
inline CandidateSet build_candidate_sets(const FeatureMatrix& features, double epsilon, Index s, const CoveringNet& net,
                                         bool line_centres_cover_interval = true,
                                         std::uint64_t max_triples = kMaxCandidateTriples) {
  if (net.dim != s) throw ValidationError("dimension mismatch", "net dimension must equal s");
  if (s < 1 || s > features.d()) throw ValidationError("sparsity range", "need 1 <= s <= d");
  auto centres = group_centres(net, epsilon, line_centres_cover_interval);
  const std::uint64_t triples = triple_count(features.d(), s, net.size(), centres.size());
  if (triples > max_triples) {
    throw GuardError("parameter elimination needs " + std::to_string(triples) + " candidate triples, above the cap of " +
                     std::to_string(max_triples));
  }
  return CandidateSet(features.matrix(), epsilon, s, net, std::move(centres));
}

struct Violation {
  Index triple;
  Index rival_family;
  Index action;
};

/// First violating (triple, rival, action) in scan order, starting the triple
/// scan at `start_triple`: a rival is any alive family on a different subset
/// (or any other alive family with `same_subset_rivals`), the action lies in
/// the triple's group, and the rival's prediction deviates from <w, theta_M>
/// by more than 5 eps / 2.
inline std::optional<Violation> find_violation(const CandidateSet& cs, Index start_triple = 0,
                                               bool same_subset_rivals = false) {
  const double threshold = 2.5 * cs.epsilon();
  const Index centres = cs.centres().size();
  const Index families = cs.family_count();
  for (Index t = start_triple; t < cs.triple_count(); ++t) {
    const Index f = cs.family_of(t);
    if (!cs.alive(f)) {
      t = (f + 1) * centres - 1;
      continue;
    }
    const Index m = cs.subset_of_family(f);
    const Index excluded = same_subset_rivals ? cs.subsets().size() : m;
    const double c = cs.centre_value(t);
    bool any = false;
    for (Index x = 0; x < cs.k() && !any; ++x) {
      if (!cs.in_group(t, x)) continue;
      any = cs.rival_max(x, excluded) - c > threshold || c - cs.rival_min(x, excluded) > threshold;
    }
    if (!any) continue;
    const auto grp = cs.group(t);
    for (Index rival = 0; rival < families; ++rival) {
      if (!cs.alive(rival) || rival == f || cs.subset_of_family(rival) == excluded) continue;
      for (Index x : grp) {
        if (std::abs(cs.prediction(rival, x) - c) > threshold) return Violation{t, rival, x};
      }
    }
  }
  return std::nullopt;
}

struct EliminationEvent {
  std::size_t query;  // 1-based query number
  Index action;
  double reward;
  Index removed_family;
  bool removed_own;  // true: the triple's own (M, theta_M) was removed; false: the rival's
};

struct ParamEliminationResult {
  IndexSet support;  // L
  Vector theta;      // theta_L (a net point)
  Index family = 0;
  std::size_t triples_initial = 0;
  std::size_t triples_remaining = 0;
  std::size_t families_initial = 0;
  std::size_t families_remaining = 0;
  std::size_t queries = 0;
  std::size_t net_size = 0;
  std::vector<EliminationEvent> log;
};

inline ParamEliminationResult run_parameter_elimination(const BanditInstance& instance, QueryLedger& ledger,
                                                        const ParamEliminationOptions& opt = {}) {
  if (instance.noise().kind != NoiseModel::Kind::kNone) {
    throw ValidationError("deterministic instance", "parameter elimination is defined for noiseless rewards only");
  }
  const Index s = instance.s();
  const double eps = instance.epsilon();
  CoveringNet net = opt.net ? *opt.net : build_separated_net(s, std::min(eps, 2.0), opt.net_seed, opt.pool_size);
  CandidateSet cs = build_candidate_sets(instance.features(), eps, s, net, opt.line_centres_cover_interval, opt.max_triples);

  ParamEliminationResult res;
  res.triples_initial = cs.triple_count();
  res.families_initial = cs.family_count();
  res.net_size = cs.net().size();
  const std::size_t start_queries = ledger.size();

  // Triples found violation-free stay violation-free (the alive set only
  // shrinks), so the scan cursor never moves backwards.
  Index cursor = 0;
  while (auto v = find_violation(cs, cursor, opt.same_subset_rivals)) {
    cursor = v->triple;
    const double r = query(instance, v->action, ledger);
    const bool own = std::abs(r - cs.centre_value(v->triple)) > 1.5 * eps;
    const Index removed = own ? cs.family_of(v->triple) : v->rival_family;
    cs.remove_family(removed);
    res.log.push_back({ledger.size() - start_queries, v->action, r, removed, own});
  }
  res.queries = ledger.size() - start_queries;
  res.triples_remaining = cs.alive_triples();
  res.families_remaining = cs.alive_families();

  for (Index f = 0; f < cs.family_count(); ++f) {
    if (cs.alive(f)) {
      res.family = f;
      res.support = cs.subsets()[cs.subset_of_family(f)];
      res.theta = cs.net().points[cs.estimate_of_family(f)];
      return res;
    }
  }
  throw NumericalError("parameter elimination removed every candidate; the net has no point within eps/2 of the truth");
}

}  // namespace sparse_bandit
