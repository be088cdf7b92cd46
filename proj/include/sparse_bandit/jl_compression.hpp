#pragma once

// Random-sign inner-product-preserving maps with an explicit certificate.

#include "sparse_bandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace sparse_bandit {

inline constexpr double kDefaultJlConstant = 8.0;
inline constexpr std::size_t kDefaultCertifyRetries = 32;

struct CompressionMap {
  Matrix matrix;  // p x d
  Index p = 0;
  Index d = 0;
  double upsilon = 0.0;  // distortion the map was certified at (0 if never certified)
  std::uint64_t seed = 0;

  Vector apply(const Vector& x) const { return matrix * x; }
  /// Maps every row of a k x d matrix; returns k x p.
  Matrix apply_rows(const Matrix& rows) const { return rows * matrix.transpose(); }
};

/// p = ceil(c_jl ln(k) / upsilon^2), clamped to [1, d].
inline Index choose_target_dim(double k_effective, double upsilon, Index d, double c_jl = kDefaultJlConstant) {
  if (!(k_effective >= 2.0)) throw ValidationError("target dimension input", "k_effective must be >= 2");
  if (!(upsilon > 0.0)) throw ValidationError("target dimension input", "upsilon must be positive");
  if (!(c_jl > 0.0)) throw ValidationError("target dimension input", "c_jl must be positive");
  if (d < 1) throw ValidationError("target dimension input", "d must be >= 1");
  const double raw = std::ceil(c_jl * std::log(k_effective) / (upsilon * upsilon));
  if (!(raw < static_cast<double>(d))) return d;
  return std::max<Index>(1, static_cast<Index>(raw));
}

/// Dense matrix with independent +-1/sqrt(p) entries. p = d with seed 0 is the identity.
inline CompressionMap build_map(Index d, Index p, std::uint64_t seed) {
  if (d < 1 || p < 1 || p > d) throw ValidationError("map dimensions", "need 1 <= p <= d");
  CompressionMap map;
  map.p = p;
  map.d = d;
  map.seed = seed;
  if (p == d && seed == 0) {
    map.matrix = Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
    return map;
  }
  map.matrix.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution coin(0.5);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  for (Eigen::Index i = 0; i < map.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.matrix.cols(); ++j) map.matrix(i, j) = coin(gen) ? scale : -scale;
  }
  return map;
}

/// max over actions a of |<f(a), f(theta)> - <a, theta>|; actions are rows.
inline double certify(const CompressionMap& map, const Matrix& actions, const Vector& theta) {
  if (actions.cols() != map.matrix.cols() || theta.size() != map.matrix.cols()) {
    throw ValidationError("dimension mismatch", "actions and theta must have d coordinates");
  }
  if (actions.rows() == 0) return 0.0;
  const Vector ft = map.matrix * theta;
  const Vector compressed = (actions * map.matrix.transpose()) * ft;
  return (compressed - actions * theta).cwiseAbs().maxCoeff();
}

struct CertifiedMap {
  CompressionMap map;
  double violation = 0.0;
  std::size_t attempts = 0;
};

/// Draws maps with seeds first_seed, first_seed + 1, ... until one has
/// certify <= 2 upsilon. Needs theta, so this runs on the harness side only.
/// When p = d nothing needs compressing and the identity is returned.
inline CertifiedMap certified_map(const Matrix& actions, const Vector& theta, Index p, double upsilon,
                                  std::uint64_t first_seed = 0, std::size_t retries = kDefaultCertifyRetries) {
  if (p == static_cast<Index>(actions.cols())) {
    CompressionMap id = build_map(p, p, 0);
    id.upsilon = upsilon;
    const double v = certify(id, actions, theta);
    return {std::move(id), v, 1};
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < retries; ++a) {
    CompressionMap map = build_map(static_cast<Index>(actions.cols()), p, first_seed + a);
    const double v = certify(map, actions, theta);
    best = std::min(best, v);
    if (v <= 2.0 * upsilon) {
      map.upsilon = upsilon;
      return {std::move(map), v, a + 1};
    }
  }
  throw ConvergenceError("no map with distortion <= " + std::to_string(2.0 * upsilon) + " in " + std::to_string(retries) +
                             " seeds (best " + std::to_string(best) + ")",
                         best);
}

}  // namespace sparse_bandit
