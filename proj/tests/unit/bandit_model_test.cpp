#include "sparse_bandit/bandit_model.hpp"
#include "sparse_bandit/covering_net.hpp"
#include "sparse_bandit/instance_generators.hpp"
#include "sparse_bandit/instance_io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <sstream>

namespace sb = sparse_bandit;
using sb::testing::rows_of;
using sb::testing::vec;

TEST(BanditModel, SingleActionReward) {
  const auto inst = sb::build_instance(sb::FeatureMatrix(rows_of({{1, 0}})), sb::SparseParameter(vec({0.5, 0}), 1), vec({0}), 0.1);
  EXPECT_DOUBLE_EQ(inst.rewards()(0), 0.5);
}

TEST(BanditModel, RejectsMisspecificationAboveEpsilon) {
  try {
    sb::build_instance(sb::FeatureMatrix(rows_of({{1, 0}})), sb::SparseParameter(vec({0.5, 0}), 1), vec({0.2}), 0.1);
    FAIL() << "expected a validation error";
  } catch (const sb::ValidationError& e) {
    EXPECT_EQ(e.invariant(), "misspecification exceeds epsilon");
  }
}

TEST(BanditModel, HandComputedDotProduct) {
  const auto inst = sb::build_instance(sb::FeatureMatrix(rows_of({{0.5, 0.5, 0.5, 0.5}})),
                                       sb::SparseParameter(vec({0.6, 0, 0.8, 0}), 2), vec({0.05}), 0.1);
  EXPECT_NEAR(inst.rewards()(0), 0.75, 1e-15);
}

TEST(BanditModel, RowNormAndSparsityChecks) {
  EXPECT_THROW(sb::FeatureMatrix(rows_of({{1.0, 0.5}})), sb::ValidationError);
  EXPECT_THROW(sb::SparseParameter(vec({0.5, 0.5}), 1), sb::ValidationError);
  EXPECT_THROW(sb::SparseParameter(vec({0.9, 0.9}), 2), sb::ValidationError);
  EXPECT_NO_THROW(sb::SparseParameter(vec({0.9, 0.9}), 2, sb::NormCheck::kSkip));
}

TEST(BanditModel, DeterministicQueriesAndLedger) {
  const auto inst = sb::testing::linear_instance(rows_of({{1, 0}, {0, 1}}), vec({0.3, 0}));
  sb::QueryLedger ledger;
  const double a = sb::query(inst, 0, ledger);
  const double b = sb::query(inst, 0, ledger);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ledger.size(), 2u);
  EXPECT_EQ(ledger.entries()[1].tick, 1u);
  EXPECT_THROW(sb::query(inst, 2, ledger), std::out_of_range);
  EXPECT_EQ(ledger.size(), 2u);
}

TEST(BanditModel, NoisySampleMean) {
  sb::NoiseModel noise{sb::NoiseModel::Kind::kGaussian, 1.0, 17};
  const auto inst = sb::build_instance(sb::FeatureMatrix(rows_of({{0.6, 0.8}})), sb::SparseParameter(vec({0.5, 0}), 1),
                                       vec({0}), 0.1, noise);
  sb::QueryLedger ledger;
  double total = 0.0;
  for (int i = 0; i < 10000; ++i) total += sb::query(inst, 0, ledger);
  EXPECT_NEAR(total / 10000.0, inst.rewards()(0), 0.05);
}

TEST(BanditModel, BestActionTieBreaksLow) {
  const auto inst = sb::testing::linear_instance(rows_of({{0.1}, {0.9}, {0.9}}), vec({1.0}));
  const auto best = sb::brute_force_best(inst);
  EXPECT_EQ(best.index, 1u);
  EXPECT_DOUBLE_EQ(best.reward, 0.9);
  const auto single = sb::testing::linear_instance(rows_of({{0.4}}), vec({1.0}));
  EXPECT_EQ(sb::brute_force_best(single).index, 0u);
}

TEST(BanditModel, BestActionMatchesLinearScan) {
  sb::RandomInstanceSpec spec;
  spec.k = 20;
  spec.seed = 5;
  const auto inst = sb::random_sparse_instance(spec);
  Eigen::Index arg = 0;
  const double top = inst.rewards().maxCoeff(&arg);
  for (Eigen::Index i = 0; i < arg; ++i) ASSERT_LT(inst.rewards()(i), top);
  EXPECT_EQ(sb::brute_force_best(inst).index, static_cast<sb::Index>(arg));
}

TEST(BanditModel, UniformErrorEdgeCases) {
  const auto inst = sb::testing::linear_instance(rows_of({{0.6, 0.0}, {0.0, -0.7}, {0.3, 0.4}}), vec({0.8, 0}));
  const std::vector<sb::Index> support{0};
  EXPECT_EQ(sb::uniform_error(inst, support, vec({0.8})), 0.0);
  EXPECT_DOUBLE_EQ(sb::uniform_error(inst, support, vec({0.0})), inst.rewards().cwiseAbs().maxCoeff());
  EXPECT_DOUBLE_EQ(sb::uniform_error(inst, vec({0.0, 0.0})), inst.rewards().cwiseAbs().maxCoeff());
}

TEST(CoveringNet, ZeroSphereHasTwoPoints) {
  const auto net = sb::build_separated_net(1, 1.0, 3);
  ASSERT_EQ(net.size(), 2u);
  EXPECT_DOUBLE_EQ(std::abs(net.points[0](0)), 1.0);
  EXPECT_DOUBLE_EQ(net.points[0](0), -net.points[1](0));
}

TEST(CoveringNet, SeparationAndSizeBound) {
  for (sb::Index s : {1, 2, 3}) {
    for (double eps : {2.0, 1.0, 0.5}) {
      const auto net = sb::build_separated_net(s, eps, 11);
      EXPECT_LE(static_cast<double>(net.size()), sb::net_size_bound(s, eps));
      for (std::size_t i = 0; i < net.size(); ++i) {
        EXPECT_NEAR(net.points[i].norm(), 1.0, 1e-12);
        for (std::size_t j = i + 1; j < net.size(); ++j) ASSERT_GE((net.points[i] - net.points[j]).norm(), eps / 2.0);
      }
    }
  }
}

TEST(CoveringNet, NearestPointMatchesScan) {
  const auto net = sb::build_separated_net(3, 0.5, 2);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const sb::Vector x = vec({n(gen), n(gen), n(gen)});
    const auto got = sb::nearest_net_point(net, x);
    for (std::size_t i = 0; i < net.size(); ++i) ASSERT_LE((net.points[got] - x).norm(), (net.points[i] - x).norm());
  }
  EXPECT_EQ(sb::nearest_net_point(net, net.points[4]), 4u);
  const auto line = sb::build_separated_net(1, 1.0, 0);
  EXPECT_EQ(line.points[sb::nearest_net_point(line, vec({0.3}))](0), 1.0);
}

TEST(CoveringNet, IncludePointRestoresSeparation) {
  const double eps = 0.4;
  const auto net = sb::build_separated_net(2, eps, 4);
  EXPECT_EQ(sb::include_point(net, net.points[0]).points, net.points);

  const double angle = std::atan2(net.points[1](1), net.points[1](0)) + eps / 4.0;
  const sb::Vector v = vec({std::cos(angle), std::sin(angle)});
  const auto out = sb::include_point(net, v);
  EXPECT_NE(std::find(out.points.begin(), out.points.end(), v), out.points.end());
  EXPECT_EQ(std::find(out.points.begin(), out.points.end(), net.points[1]), out.points.end());
  EXPECT_GE(sb::min_pairwise_distance(out), eps / 2.0);

  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    sb::Vector w = vec({n(gen), n(gen)});
    w /= w.norm();
    EXPECT_GE(sb::min_pairwise_distance(sb::include_point(net, w)), eps / 2.0);
  }
}

TEST(InstanceIo, RoundTripIsBitExact) {
  sb::RandomInstanceSpec spec;
  spec.k = 15;
  spec.d = 5;
  spec.s = 2;
  spec.seed = 21;
  spec.noise = {sb::NoiseModel::Kind::kGaussian, 0.3, 8};
  const auto inst = sb::random_sparse_instance(spec);
  std::stringstream buf;
  sb::write_instance(buf, inst);
  const auto back = sb::read_instance(buf);
  const auto same = [](const sb::Matrix& a, const sb::Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
  };
  EXPECT_TRUE(same(inst.features().matrix(), back.features().matrix()));
  EXPECT_TRUE(same(inst.theta_star().coords(), back.theta_star().coords()));
  EXPECT_TRUE(same(inst.misspec(), back.misspec()));
  EXPECT_TRUE(same(inst.rewards(), back.rewards()));
  EXPECT_EQ(back.noise().scale, 0.3);
  EXPECT_EQ(back.noise().seed, 8u);
  std::stringstream again;
  sb::write_instance(again, back);
  std::stringstream first;
  sb::write_instance(first, inst);
  EXPECT_EQ(first.str(), again.str());
}

TEST(InstanceIo, ParseErrorsCarryLineNumbers) {
  std::istringstream in("sparse-bandit-instance 1\nk 1\nd 2\ns one\n");
  try {
    sb::read_instance(in);
    FAIL() << "expected a parse error";
  } catch (const sb::ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(std::string(e.what()).rfind("line 4:", 0), 0u);
  }
}

TEST(InstanceIo, ReportNamesCorruptedMisspecification) {
  sb::RandomInstanceSpec spec;
  spec.seed = 3;
  auto rec = sb::to_record(sb::random_sparse_instance(spec));
  EXPECT_TRUE(sb::check_record(rec).ok());
  rec.misspec(2) = 5.0 * rec.epsilon;
  const auto rep = sb::check_record(rec);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].invariant, "misspecification exceeds epsilon");
}
