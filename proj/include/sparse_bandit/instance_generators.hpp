#pragma once

// Seeded random instances used by the runner, the tests and the acceptance suite.

#include "sparse_bandit/bandit_model.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace sparse_bandit {

struct RandomInstanceSpec {
  Index k = 40;
  Index d = 4;
  Index s = 1;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  NoiseModel noise;
  /// Scale theta* to unit norm (so a net can contain its restriction exactly).
  bool unit_theta = true;
};

/// Rows: uniform direction times a uniform radius in [0, 1]. theta*: uniform
/// random support, Gaussian coordinates. nu: uniform on [-eps, eps].
inline BanditInstance random_sparse_instance(const RandomInstanceSpec& spec) {
  if (spec.k < 1 || spec.d < 1 || spec.s < 1 || spec.s > spec.d) {
    throw ValidationError("random instance shape", "need k >= 1 and 1 <= s <= d");
  }
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix a(static_cast<Eigen::Index>(spec.k), static_cast<Eigen::Index>(spec.d));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Vector v(static_cast<Eigen::Index>(spec.d));
    do {
      for (auto& x : v) x = normal(gen);
    } while (v.norm() < 1e-12);
    a.row(i) = (v / v.norm() * unit(gen)).transpose();
  }
  std::vector<Index> perm(spec.d);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), gen);
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(spec.d));
  for (Index j = 0; j < spec.s; ++j) {
    double x = 0.0;
    while (std::abs(x) < 1e-3) x = normal(gen);
    theta(static_cast<Eigen::Index>(perm[j])) = x;
  }
  if (spec.unit_theta || theta.norm() > 1.0) theta /= theta.norm();
  Vector nu(static_cast<Eigen::Index>(spec.k));
  for (auto& x : nu) x = spec.epsilon * (2.0 * unit(gen) - 1.0);
  return build_instance(FeatureMatrix(std::move(a)), SparseParameter(std::move(theta), spec.s), std::move(nu), spec.epsilon,
                        spec.noise);
}

}  // namespace sparse_bandit
