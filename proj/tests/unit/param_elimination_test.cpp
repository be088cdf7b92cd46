#include "sparse_bandit/instance_generators.hpp"
#include "sparse_bandit/param_elimination.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <optional>
#include <set>

namespace sb = sparse_bandit;
using sb::testing::rows_of;
using sb::testing::vec;

namespace {

struct Brute {
  sb::Index triple, rival, action;
};

// Recomputes every inner product from the net, centres and subsets and scans
// (triple, rival, action) in order.
std::optional<Brute> brute_violation(const sb::Matrix& phi, const sb::CandidateSet& cs, bool same_subset) {
  const double eps = cs.epsilon();
  const auto& net = cs.net().points;
  const auto& centres = cs.centres();
  auto pred = [&](sb::Index family, sb::Index x) {
    const auto& m = cs.subsets()[family / net.size()];
    return sb::restrict_vector(phi.row(static_cast<Eigen::Index>(x)).transpose(), m).dot(net[family % net.size()]);
  };
  const sb::Index families = cs.subsets().size() * net.size();
  for (sb::Index t = 0; t < families * centres.size(); ++t) {
    const sb::Index f = t / centres.size();
    if (!cs.alive(f)) continue;
    const double c = centres[t % centres.size()].dot(net[f % net.size()]);
    for (sb::Index r = 0; r < families; ++r) {
      if (!cs.alive(r) || r == f) continue;
      if (!same_subset && r / net.size() == f / net.size()) continue;
      for (sb::Index x = 0; x < static_cast<sb::Index>(phi.rows()); ++x) {
        if (std::abs(pred(f, x) - c) > eps / 2.0) continue;
        if (std::abs(pred(r, x) - c) > 2.5 * eps) return Brute{t, r, x};
      }
    }
  }
  return std::nullopt;
}

sb::BanditInstance small_instance(std::uint64_t seed, sb::Index d, sb::Index s, double eps, sb::Index k = 30) {
  sb::RandomInstanceSpec spec;
  spec.k = k;
  spec.d = d;
  spec.s = s;
  spec.epsilon = eps;
  spec.seed = seed;
  return sb::random_sparse_instance(spec);
}

}  // namespace

TEST(CandidateSets, CountsEightTriplesOnTheLine) {
  const auto net = sb::build_separated_net(1, 1.0, 0);
  const auto cs = sb::build_candidate_sets(sb::FeatureMatrix(rows_of({{1, 0}, {0, 1}})), 1.0, 1, net, false);
  EXPECT_EQ(cs.triple_count(), 8u);
  EXPECT_EQ(sb::triple_count(2, 1, 2, 2), 8u);
}

TEST(CandidateSets, ActionAtItsCentreIsInEveryGroup) {
  const double eps = 0.5;
  const auto net = sb::build_separated_net(2, eps, 3);
  const sb::Vector w = net.points[2];
  const auto cs = sb::build_candidate_sets(sb::FeatureMatrix(rows_of({{w(0), w(1)}, {0.1, 0.2}})), eps, 2, net);
  for (sb::Index f = 0; f < cs.family_count(); ++f) EXPECT_TRUE(cs.in_group(f * cs.centres().size() + 2, 0));
}

TEST(CandidateSets, GroupsMatchDirectInequality) {
  const auto inst = small_instance(4, 3, 2, 0.5, 12);
  const auto net = sb::build_separated_net(2, 0.5, 4);
  const auto cs = sb::build_candidate_sets(inst.features(), 0.5, 2, net);
  const auto& phi = inst.features().matrix();
  for (sb::Index t = 0; t < cs.triple_count(); ++t) {
    const sb::Index f = cs.family_of(t);
    const auto& m = cs.subsets()[cs.subset_of_family(f)];
    const sb::Vector& th = net.points[cs.estimate_of_family(f)];
    const sb::Vector& w = cs.centres()[cs.centre_of(t)];
    std::vector<sb::Index> expect;
    for (sb::Index x = 0; x < inst.k(); ++x) {
      if (std::abs(th.dot(sb::restrict_vector(phi.row(static_cast<Eigen::Index>(x)).transpose(), m) - w)) <= 0.25) expect.push_back(x);
    }
    ASSERT_EQ(cs.group(t), expect) << "triple " << t;
  }
}

TEST(CandidateSets, IntervalCentresForTheLine) {
  const auto net = sb::build_separated_net(1, 0.5, 0);
  const auto centres = sb::group_centres(net, 0.5, true);
  ASSERT_EQ(centres.size(), 9u);
  EXPECT_DOUBLE_EQ(centres.front()(0), -1.0);
  EXPECT_DOUBLE_EQ(centres.back()(0), 1.0);
  EXPECT_EQ(sb::group_centres(net, 0.5, false).size(), 2u);
}

TEST(CandidateSets, GuardRefusesOversizedCollections) {
  const auto net = sb::build_separated_net(2, 0.2, 0);
  EXPECT_THROW(sb::build_candidate_sets(sb::FeatureMatrix(sb::Matrix::Zero(3, 6)), 0.2, 2, net, true, 1000), sb::GuardError);
}

TEST(FindViolation, NoneWhenEveryPredictionAgrees) {
  const auto net = sb::build_separated_net(1, 0.5, 0);
  const auto cs = sb::build_candidate_sets(sb::FeatureMatrix(sb::Matrix::Zero(4, 3)), 0.5, 1, net);
  EXPECT_FALSE(sb::find_violation(cs, 0, true).has_value());
  EXPECT_FALSE(sb::find_violation(cs, 0, false).has_value());
}

TEST(FindViolation, GapOfThreeEpsilonIsReturned) {
  const double eps = 0.2;
  const auto net = sb::build_separated_net(1, eps, 0);
  const auto cs = sb::build_candidate_sets(sb::FeatureMatrix(rows_of({{0.6, 0.0}})), eps, 1, net);
  const auto v = sb::find_violation(cs);
  ASSERT_TRUE(v.has_value());
  EXPECT_TRUE(cs.in_group(v->triple, v->action));
  EXPECT_NE(cs.subset_of_family(v->rival_family), cs.subset_of_family(cs.family_of(v->triple)));
  EXPECT_GT(std::abs(cs.prediction(v->rival_family, v->action) - cs.centre_value(v->triple)), 2.5 * eps);
}

TEST(FindViolation, AgreesWithFullEnumeration) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = small_instance(seed, 3, 1 + seed % 2, 0.4, 10);
    const auto net = sb::build_separated_net(inst.s(), 0.4, seed);
    auto cs = sb::build_candidate_sets(inst.features(), 0.4, inst.s(), net);
    const bool same = seed % 3 != 0;
    // Knock families out one at a time and re-compare after each removal.
    for (int step = 0; step < 8; ++step) {
      const auto fast = sb::find_violation(cs, 0, same);
      const auto slow = brute_violation(inst.features().matrix(), cs, same);
      ASSERT_EQ(fast.has_value(), slow.has_value()) << "seed " << seed << " step " << step;
      if (!fast) break;
      EXPECT_EQ(fast->triple, slow->triple);
      EXPECT_EQ(fast->rival_family, slow->rival);
      EXPECT_EQ(fast->action, slow->action);
      ++compared;
      cs.remove_family(step % 2 ? fast->rival_family : cs.family_of(fast->triple));
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(ParameterElimination, LargeEpsilonNeedsLittleWork) {
  const auto inst = small_instance(2, 3, 1, 1.0);
  sb::QueryLedger ledger;
  const auto r = sb::run_parameter_elimination(inst, ledger);
  EXPECT_LE(r.queries, 4u);
  EXPECT_LE(sb::uniform_error(inst, r.support, r.theta), 4.0);
}

TEST(ParameterElimination, ScaledTruthOnFourCoordinates) {
  sb::RandomInstanceSpec spec;
  spec.k = 40;
  spec.d = 4;
  spec.epsilon = 0.1;
  spec.seed = 6;
  const auto base = sb::random_sparse_instance(spec);
  const sb::Vector theta = vec({0, 0, 0.9, 0});
  const auto inst = sb::build_instance(base.features(), sb::SparseParameter(theta, 1), base.misspec(), 0.1);
  sb::ParamEliminationOptions opt;
  opt.net = sb::include_point(sb::build_separated_net(1, 0.1, 0), vec({1.0}));
  sb::QueryLedger ledger;
  const auto r = sb::run_parameter_elimination(inst, ledger, opt);
  EXPECT_LE(sb::uniform_error(inst, r.support, r.theta), 0.4 + 1e-9);
  EXPECT_LE(static_cast<double>(ledger.size()), sb::net_size_bound(1, 0.1) * 4.0);
}

TEST(ParameterElimination, OneQueryRemovesOneFamily) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = small_instance(seed, 4, 2, 0.3);
    sb::QueryLedger ledger;
    const auto r = sb::run_parameter_elimination(inst, ledger);
    EXPECT_EQ(r.log.size(), r.queries);
    EXPECT_EQ(ledger.size(), r.queries);
    std::set<sb::Index> removed;
    for (const auto& e : r.log) EXPECT_TRUE(removed.insert(e.removed_family).second);
    EXPECT_EQ(r.families_initial - r.families_remaining, r.queries);
    EXPECT_LE(r.queries, r.net_size * sb::binomial(4, 2));
    EXPECT_LE(static_cast<double>(r.queries), sb::net_size_bound(2, 0.3) * static_cast<double>(sb::binomial(4, 2)));
  }
}

TEST(ParameterElimination, GroundTruthFamilySurvives) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto inst = small_instance(seed, 4, 1 + seed % 2, 0.2);
    const auto& m = inst.theta_star().support();
    sb::ParamEliminationOptions opt;
    opt.net = sb::include_point(sb::build_separated_net(inst.s(), 0.2, seed),
                                sb::restrict_vector(inst.theta_star().coords(), m));
    sb::QueryLedger ledger;
    const auto r = sb::run_parameter_elimination(inst, ledger, opt);
    EXPECT_LE(sb::uniform_error(inst, r.support, r.theta), 0.8 + 1e-9) << "seed " << seed;
    for (const auto& e : r.log) {
      const sb::Index subset = e.removed_family / r.net_size;
      const bool truth = opt.net->points[e.removed_family % r.net_size] == sb::restrict_vector(inst.theta_star().coords(), m);
      EXPECT_FALSE(truth && sb::all_subsets(inst.d(), inst.s())[subset] == m) << "seed " << seed;
    }
  }
}

TEST(ParameterElimination, RefusesNoisyInstances) {
  sb::RandomInstanceSpec spec;
  spec.noise = {sb::NoiseModel::Kind::kGaussian, 0.1, 0};
  const auto inst = sb::random_sparse_instance(spec);
  sb::QueryLedger ledger;
  EXPECT_THROW(sb::run_parameter_elimination(inst, ledger), sb::ValidationError);
}
