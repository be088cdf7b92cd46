#include "../common/recovery_oracle.hpp"
#include "sparse_bandit/general_features.hpp"
#include "sparse_bandit/instance_generators.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace sb = sparse_bandit;
using sb::testing::rows_of;
using sb::testing::vec;

namespace {

sb::BanditInstance instance(std::uint64_t seed, sb::Index k, sb::Index d, sb::Index s, double eps) {
  sb::RandomInstanceSpec spec;
  spec.k = k;
  spec.d = d;
  spec.s = s;
  spec.epsilon = eps;
  spec.seed = seed;
  return sb::random_sparse_instance(spec);
}

sb::Matrix gaussian(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  sb::Matrix m(rows, cols);
  for (auto& x : m.reshaped()) x = n(gen);
  return m;
}

}  // namespace

TEST(MinimaxFit, ConstantModel) {
  const auto fit = sb::minimax_fit(rows_of({{1}, {1}, {1}}), vec({0, 1, 2}));
  EXPECT_NEAR(fit.theta(0), 1.0, 1e-12);
  EXPECT_NEAR(fit.objective, 1.0, 1e-12);
}

TEST(MinimaxFit, MatchesReferenceSetOracle) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 15; ++t) {
    const sb::Matrix a = gaussian(gen, 9 + t % 4, 1 + t % 3);
    const sb::Matrix y = gaussian(gen, a.rows(), 1);
    const auto fit = sb::minimax_fit(a, y.col(0));
    EXPECT_NEAR(fit.objective, sb::oracle::reference_set_minimax(a, y.col(0)), 1e-10 * std::max(1.0, fit.objective));
  }
}

TEST(SparseRecovery, ExactInterpolation) {
  std::mt19937_64 gen(11);
  const sb::Matrix psi = gaussian(gen, 20, 6);
  const sb::Vector theta0 = vec({0, 0.7, 0, 0, -0.4, 0});
  const auto rec = sb::sparse_linf_recover(psi, psi * theta0, 2);
  EXPECT_LE(rec.objective, 1e-10);
  EXPECT_EQ(rec.support, (sb::IndexSet{1, 4}));
  EXPECT_LE((rec.theta - theta0).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SparseRecovery, MatchesIndependentEnumerator) {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 10; ++t) {
    const sb::Matrix psi = gaussian(gen, 12, 6);
    const sb::Vector y = gaussian(gen, 12, 1).col(0);
    const auto rec = sb::sparse_linf_recover(psi, y, 2);
    EXPECT_NEAR(rec.objective, sb::oracle::sparse_minimax(psi, y, 2), 1e-10 * std::max(1.0, rec.objective));
    EXPECT_NEAR(rec.objective, (psi * rec.theta - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SparseRecovery, NoWorseThanGroundTruth) {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int t = 0; t < 10; ++t) {
    const sb::Matrix psi = gaussian(gen, 15, 7);
    sb::Vector truth = sb::Vector::Zero(7);
    truth(t % 7) = 0.8;
    truth((t + 3) % 7) = -0.5;
    sb::Vector y = psi * truth;
    for (auto& x : y) x += n(gen);
    const auto rec = sb::sparse_linf_recover(psi, y, 2);
    EXPECT_LE(rec.objective, (psi * truth - y).cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST(SparseRecovery, RejectsDegenerateAndOversizedInputs) {
  EXPECT_THROW(sb::sparse_linf_recover(sb::Matrix::Zero(4, 3), sb::Vector::Ones(4), 1), sb::ValidationError);
  EXPECT_THROW(sb::sparse_linf_recover(sb::Matrix::Ones(4, 30), sb::Vector::Ones(4), 5, 100), sb::GuardError);
}

TEST(Representatives, ShapeAndMembership) {
  const auto inst = instance(1, 40, 5, 2, 0.1);
  const auto reps = sb::collect_representatives(inst.features(), 2);
  EXPECT_EQ(reps.z, sb::design_support_bound(2));
  EXPECT_EQ(static_cast<std::uint64_t>(reps.psi.rows()), sb::binomial(5, 2) * reps.z);
  const sb::Matrix& phi = inst.features().matrix();
  for (Eigen::Index i = 0; i < reps.psi.rows(); ++i) {
    bool member = false;
    for (Eigen::Index j = 0; j < phi.rows() && !member; ++j) member = phi.row(j) == reps.psi.row(i);
    ASSERT_TRUE(member) << "psi row " << i;
  }
  const auto single = sb::collect_representatives(sb::FeatureMatrix(phi.leftCols(2)), 2);
  EXPECT_EQ(static_cast<sb::Index>(single.psi.rows()), single.z);
}

TEST(GeneralFeatures, ExactLinearIdentityRegime) {
  const auto base = instance(4, 50, 5, 2, 0.001);
  const auto inst = sb::build_instance(base.features(), base.theta_star(), sb::Vector::Zero(50), 0.001);
  sb::QueryLedger ledger;
  const auto r = sb::run_general_features(inst, ledger);
  ASSERT_EQ(r.q, 5u);
  EXPECT_EQ(r.support, inst.theta_star().support());
  EXPECT_LE((r.theta - inst.theta_star().coords()).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_EQ(ledger.size(), r.queries);
}

TEST(GeneralFeatures, ErrorWithinTenTimesTheShape) {
  const double eps = 0.05;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = instance(seed + 500, 60, 6, 2, eps);
    sb::QueryLedger ledger;
    const auto r = sb::run_general_features(inst, ledger);
    const double shape = std::pow(2.0 * std::log(6.0), 0.25) * std::sqrt(2.0 * eps) + eps;
    EXPECT_LE(sb::uniform_error(inst, r.theta), 10.0 * shape) << "seed " << seed;
    const auto diag = sb::merged_set_diagnostic(inst, r.theta);
    EXPECT_LE(diag.measured_error, diag.chain_bound + 1e-12) << "seed " << seed;
  }
}

TEST(MergedDiagnostic, MergedSetSizes) {
  const auto inst = instance(9, 40, 6, 2, 0.1);
  const auto diag = sb::merged_set_diagnostic(inst, inst.theta_star().coords());
  EXPECT_EQ(diag.merged, inst.theta_star().support());
  EXPECT_LE(diag.g_value, 4.0 * (1.0 + 1e-6));
  EXPECT_NEAR(diag.formula_bound, 2.0 * sb::general_phi(2, 6, 0.1) * std::sqrt(diag.g_value), 1e-12);

  sb::Vector other = sb::Vector::Zero(6);
  sb::Index placed = 0;
  const auto& m = inst.theta_star().support();
  for (sb::Index j = 0; j < 6 && placed < 2; ++j) {
    if (std::find(m.begin(), m.end(), j) == m.end()) {
      other(static_cast<Eigen::Index>(j)) = 0.5;
      ++placed;
    }
  }
  EXPECT_EQ(sb::merged_set_diagnostic(inst, other).merged.size(), 4u);
}
