#include "sparse_bandit/hard_instances.hpp"
#include "sparse_bandit/param_elimination.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>

namespace sb = sparse_bandit;
using sb::testing::rows_of;

namespace {

sb::HardMatrixSpec spec_of(sb::Index k, sb::Index d, sb::Index s, double eps, std::uint64_t seed = 0) {
  sb::HardMatrixSpec spec;
  spec.k = k;
  spec.d = d;
  spec.s = s;
  spec.epsilon = eps;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST(HardRows, MomentsMatchTheConstruction) {
  const auto spec = spec_of(1000, 64, 8, 0.5, 4);
  const sb::Matrix raw = sb::sample_raw_matrix(spec);
  auto mean_se = [&](auto f, sb::Index count) {
    double sum = 0.0, sq = 0.0;
    for (sb::Index i = 0; i < count; ++i) {
      const double v = f(static_cast<Eigen::Index>(i));
      sum += v;
      sq += v * v;
    }
    const double m = sum / static_cast<double>(count);
    return std::pair{m, std::sqrt((sq / static_cast<double>(count) - m * m) / static_cast<double>(count))};
  };
  const auto [norm, norm_se] = mean_se([&](Eigen::Index i) { return raw.row(i).squaredNorm(); }, raw.rows());
  EXPECT_NEAR(norm, 1.0, 3.0 * norm_se);
  const auto [cross, cross_se] = mean_se([&](Eigen::Index i) { return raw.row(i).dot(raw.row((i + 1) % raw.rows())); }, raw.rows());
  EXPECT_NEAR(cross, 0.0, 3.0 * cross_se);
  const auto [l0, l0_se] = mean_se([&](Eigen::Index i) { return static_cast<double>(sb::detail::l0(raw.row(i).transpose())); },
                                   raw.rows());
  EXPECT_NEAR(l0, 8.0, 3.0 * l0_se);
}

TEST(HardRows, DenseWhenSparsityEqualsDimension) {
  const sb::Matrix raw = sb::sample_raw_matrix(spec_of(50, 6, 6, 0.5, 2));
  for (Eigen::Index i = 0; i < raw.rows(); ++i) EXPECT_EQ(sb::detail::l0(raw.row(i).transpose()), 6u);
}

TEST(HardRows, SeedIsReproducible) {
  const sb::Matrix a = sb::sample_raw_matrix(spec_of(20, 16, 4, 0.5, 9));
  const sb::Matrix b = sb::sample_raw_matrix(spec_of(20, 16, 4, 0.5, 9));
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())), 0);
}

TEST(HardRows, ValidationCountsEveryCondition) {
  auto spec = spec_of(3, 3, 1, 0.5);
  const auto v = sb::normalize_and_validate(rows_of({{2, 0, 0}, {0.6, 0.8, 0}, {0, 0.1, 0.99}}), spec);
  EXPECT_EQ(v.report.norm_failures, 1u);
  EXPECT_EQ(v.report.sparsity_failures, 2u);
  EXPECT_EQ(v.report.pair_failures, 1u);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(v.normalized.row(i).norm(), 1.0, 1e-15);
  EXPECT_THROW(sb::normalize_and_validate(rows_of({{0, 0, 0}}), spec), sb::ValidationError);
}

TEST(HardMatrix, GeneratedMatricesPassTheExhaustiveScan) {
  // Whole-matrix redraws only succeed for small, loose specs; row resampling
  // handles the tight one.
  auto loose = spec_of(4, 16, 16, 0.5, 1);
  loose.tau = 0.5;
  const std::pair<sb::HardMatrixSpec, sb::GenerationPolicy> cases[] = {
      {loose, sb::GenerationPolicy::kWholeMatrix},
      {spec_of(12, 64, 8, 0.5, 1), sb::GenerationPolicy::kResampleRows},
  };
  for (const auto& [spec, policy] : cases) {
    const auto gen = sb::generate_hard_matrix(spec, policy);
    const sb::Matrix& a = gen.matrix.matrix();
    ASSERT_EQ(static_cast<sb::Index>(a.rows()), spec.k);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      EXPECT_NEAR(a.row(i).norm(), 1.0, 1e-9);
      EXPECT_LE(sb::detail::l0(a.row(i).transpose()), spec.s);
      for (Eigen::Index j = i + 1; j < a.rows(); ++j) EXPECT_LE(std::abs(a.row(i).dot(a.row(j))), 0.5);
    }
    EXPECT_TRUE(sb::certify_hard_matrix(gen.matrix, spec.s, 0.5).accepted());
  }
}

TEST(KThreshold, ClosedForms) {
  auto trivial = spec_of(1, 10, 2, 1e-200);
  trivial.delta = 1.0;
  trivial.tau = 0.0;
  EXPECT_EQ(sb::k_threshold(trivial).k, 1u);

  auto large = spec_of(1, 400, 16, 0.5);
  large.tau = 0.0;
  const auto th = sb::k_threshold(large);
  EXPECT_FALSE(th.small_regime);
  EXPECT_EQ(th.k, 4u);

  auto huge = spec_of(1, 1000, 100, 1.0);
  EXPECT_TRUE(sb::k_threshold(huge).saturated);
}

TEST(KThreshold, MonotoneInItsArguments) {
  for (sb::Index d = 100; d < 1200; d += 100) {
    auto a = spec_of(1, d, 8, 0.05);
    auto b = spec_of(1, d + 100, 8, 0.05);
    ASSERT_TRUE(sb::k_threshold(a).small_regime && sb::k_threshold(b).small_regime);
    EXPECT_LE(sb::k_threshold(a).exponent, sb::k_threshold(b).exponent);
  }
  for (double eps = 0.01; eps < 0.05; eps += 0.01) {
    EXPECT_LE(sb::k_threshold(spec_of(1, 500, 4, eps)).exponent, sb::k_threshold(spec_of(1, 500, 4, eps + 0.01)).exponent);
  }
  for (sb::Index s = 1; s < 10; ++s) {
    EXPECT_LE(sb::k_threshold(spec_of(1, 64, s, 2.0)).exponent, sb::k_threshold(spec_of(1, 64, s + 1, 2.0)).exponent);
  }
  for (double eps = 1.5; eps < 3.0; eps += 0.5) {
    EXPECT_LE(sb::k_threshold(spec_of(1, 64, 4, eps)).exponent, sb::k_threshold(spec_of(1, 64, 4, eps + 0.5)).exponent);
  }
}

TEST(Embedding, RewardsAndMisspecification) {
  const double gap = 0.4, eps = 0.3;
  const auto gen = sb::generate_hard_matrix(spec_of(15, 64, 8, eps / (2.0 * gap), 5), sb::GenerationPolicy::kResampleRows);
  for (sb::Index target : {0u, 7u, 14u}) {
    const auto inst = sb::embed_index_query(gen.matrix, target, gap, eps);
    EXPECT_LE(inst.misspec().cwiseAbs().maxCoeff(), eps);
    EXPECT_EQ(inst.misspec()(target), 0.0);
    for (sb::Index i = 0; i < inst.k(); ++i) {
      EXPECT_NEAR(inst.rewards()(static_cast<Eigen::Index>(i)), i == target ? 2.0 * gap : 0.0, 1e-15);
    }
    EXPECT_NEAR(inst.theta_star().coords().norm(), 2.0 * gap, 1e-12);
    ASSERT_TRUE(inst.hard_info().has_value());
    EXPECT_EQ(inst.hard_info()->target, target);
  }
}

TEST(Embedding, RandomSearchIsSoundAndAveragesHalfTheActions) {
  const auto gen = sb::generate_hard_matrix(spec_of(39, 64, 8, 0.5, 2), sb::GenerationPolicy::kResampleRows);
  const auto inst = sb::embed_index_query(gen.matrix, 11, 0.5, 0.5);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    sb::QueryLedger ledger;
    const auto out = sb::random_search(inst, 0.5, seed, ledger);
    ASSERT_EQ(out.found, 11u);
    total += static_cast<double>(out.queries);
  }
  EXPECT_NEAR(total / 400.0, 20.0, 2.0);

  const auto one = sb::embed_index_query(sb::generate_hard_matrix(spec_of(1, 8, 2, 0.5)).matrix, 0, 0.5, 0.5);
  sb::QueryLedger ledger;
  EXPECT_EQ(sb::random_search(one, 0.5, 3, ledger).queries, 1u);
}

TEST(Embedding, ProbeTrendForParameterElimination) {
  std::vector<sb::BanditInstance> family;
  for (sb::Index k : {4u, 8u, 16u}) {
    const auto gen = sb::generate_hard_matrix(spec_of(k, 12, 2, 0.5, k), sb::GenerationPolicy::kResampleRows);
    family.push_back(sb::embed_index_query(gen.matrix, 0, 0.5, 0.5));
  }
  const sb::QueryCounter param_elim = [](const sb::BanditInstance& inst, std::uint64_t seed) {
    sb::ParamEliminationOptions opt;
    opt.net_seed = seed;
    sb::QueryLedger ledger;
    sb::run_parameter_elimination(inst, ledger, opt);
    return ledger.size();
  };
  const auto curve = sb::hardness_probe(family, param_elim, 5);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_TRUE(curve.non_decreasing);
}

TEST(ConditionRates, BudgetsFollowDelta) {
  auto spec = spec_of(10, 64, 8, 0.5);
  const auto rates = sb::condition_failure_rates(spec, 0, 20);
  EXPECT_EQ(rates.trials, 20u);
  EXPECT_DOUBLE_EQ(rates.sparsity_budget, 0.25);
  EXPECT_DOUBLE_EQ(rates.norm_budget, 0.25);
  EXPECT_DOUBLE_EQ(rates.pairwise_budget, 0.25 * 9.0 / 10.0);
  for (double r : {rates.sparsity, rates.norm, rates.pairwise}) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}
