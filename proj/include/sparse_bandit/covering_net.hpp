#pragma once

// Greedy eps/2-separated nets on the unit sphere S^{s-1}.

#include "sparse_bandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace sparse_bandit {

inline constexpr std::size_t kMaxCandidatePool = 1'000'000;

struct CoveringNet {
  std::vector<Vector> points;
  double separation = 0.0;  // eps / 2
  Index dim = 0;
  std::size_t candidate_pool_size = 0;

  std::size_t size() const { return points.size(); }
};

/// Volumetric size bound (4/eps + 1)^s.
inline double net_size_bound(Index s, double epsilon) {
  return std::pow(4.0 / epsilon + 1.0, static_cast<double>(s));
}

inline std::size_t default_pool_size(Index s, double epsilon) {
  const double want = 200.0 * net_size_bound(s, epsilon);
  return want >= static_cast<double>(kMaxCandidatePool) ? kMaxCandidatePool : static_cast<std::size_t>(want);
}

namespace detail {

inline Vector sphere_sample(std::mt19937_64& gen, Index s) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(s));
  double norm = 0.0;
  do {
    for (Index j = 0; j < s; ++j) v(static_cast<Eigen::Index>(j)) = normal(gen);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

inline bool far_from_all(const std::vector<Vector>& accepted, const Vector& candidate, double separation) {
  const double sep2 = separation * separation;
  for (const auto& p : accepted) {
    if ((p - candidate).squaredNorm() < sep2) return false;
  }
  return true;
}

}  // namespace detail

/// Greedy packing over a seeded pool of uniform sphere samples: a candidate is
/// accepted iff it is at distance >= eps/2 from every accepted point. The
/// result is maximal relative to the pool.
inline CoveringNet build_separated_net(Index s, double epsilon, std::uint64_t seed,
                                       std::optional<std::size_t> pool_size = std::nullopt) {
  if (s < 1) throw ValidationError("net dimension", "s must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 2.0)) throw ValidationError("net epsilon", "epsilon must lie in (0, 2]");
  const std::size_t pool = pool_size.value_or(default_pool_size(s, epsilon));
  if (pool > kMaxCandidatePool) {
    throw GuardError("candidate pool of " + std::to_string(pool) + " exceeds the desk-scale cap of " +
                     std::to_string(kMaxCandidatePool));
  }
  if (pool == 0) throw ValidationError("net pool", "candidate pool must be non-empty");

  CoveringNet net;
  net.separation = epsilon / 2.0;
  net.dim = s;
  net.candidate_pool_size = pool;
  std::mt19937_64 gen(seed);
  for (std::size_t c = 0; c < pool; ++c) {
    Vector candidate = detail::sphere_sample(gen, s);
    if (detail::far_from_all(net.points, candidate, net.separation)) net.points.push_back(std::move(candidate));
  }
  return net;
}

/// Index of the net point closest to x (lowest index on ties).
inline Index nearest_net_point(const CoveringNet& net, const Vector& x) {
  if (net.points.empty()) throw ValidationError("net nonempty", "cannot query an empty net");
  if (static_cast<Index>(x.size()) != net.dim) {
    throw ValidationError("dimension mismatch", "query has " + std::to_string(x.size()) + " coordinates, net has " +
                                                    std::to_string(net.dim));
  }
  Index best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < net.points.size(); ++i) {
    const double d2 = (net.points[i] - x).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

/// Returns a net that contains v, with every other point closer than eps/2 to
/// v removed. Points exactly equal to v are kept once (at their position).
inline CoveringNet include_point(const CoveringNet& net, const Vector& v) {
  if (static_cast<Index>(v.size()) != net.dim) throw ValidationError("dimension mismatch", "point dimension differs from net");
  if (std::abs(v.norm() - 1.0) > kNormTolerance) {
    throw ValidationError("unit point", "included point must have unit norm, got " + std::to_string(v.norm()));
  }
  for (const auto& p : net.points) {
    if (p == v) return net;
  }
  CoveringNet out = net;
  out.points.clear();
  const double sep2 = net.separation * net.separation;
  bool inserted = false;
  for (const auto& p : net.points) {
    if ((p - v).squaredNorm() < sep2) {
      // v replaces the first point it displaces so indices stay close to the original order.
      if (!inserted) {
        out.points.push_back(v);
        inserted = true;
      }
      continue;
    }
    out.points.push_back(p);
  }
  if (!inserted) out.points.push_back(v);
  return out;
}

/// Smallest pairwise distance (infinity for fewer than two points).
inline double min_pairwise_distance(const CoveringNet& net) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    for (std::size_t j = i + 1; j < net.points.size(); ++j) {
      best = std::min(best, (net.points[i] - net.points[j]).norm());
    }
  }
  return best;
}

}  // namespace sparse_bandit
