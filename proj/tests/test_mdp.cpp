#include <gtest/gtest.h>

#include <cmath>

#include "dqnsdde/mdp.hpp"
#include "support.hpp"

using namespace dqnsdde;
using dqnsdde::testing::example_mdp;

namespace {

bool mentions(const ValidationReport& r, const std::string& text) {
  for (const auto& f : r.failures) {
    if (f.find(text) != std::string::npos) return true;
  }
  return false;
}

MdpSpec two_by_two() {
  MdpSpec m;
  m.n_states = 2;
  m.n_actions = 2;
  m.p = {0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.25, 0.75};
  m.R = {1.0, -1.0, 0.5, 2.0};
  m.V = {1.0, 1.0, 1.0, 1.0};
  m.gamma = 0.5;
  return m;
}

}  // namespace

TEST(Mdp, ExampleIsValid) { EXPECT_TRUE(validate_mdp(example_mdp()).ok()); }

TEST(Mdp, NegativeRewardStddevRejected) {
  MdpSpec m = example_mdp();
  m.V[m.pair_index(1, 0)] = -0.1;
  const auto r = validate_mdp(m);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(mentions(r, "negative reward stddev"));
}

TEST(Mdp, BadRowSumAndGamma) {
  MdpSpec m = example_mdp();
  m.p[0] = 0.6;
  m.gamma = 1.2;
  const auto r = validate_mdp(m);
  EXPECT_TRUE(mentions(r, "p(.|0,0): row sum"));
  EXPECT_TRUE(mentions(r, "gamma must lie in (0,1)"));
  EXPECT_EQ(r.failures.size(), 2u);
}

TEST(Mdp, UniformPairFrequencies) {
  const MdpSpec m = two_by_two();
  const auto replay = ReplayModel::uniform(m);
  Rng rng(1);
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    const auto t = sample_transition(m, replay, rng);
    ++counts[m.pair_index(t.s, t.a)];
  }
  const double se = std::sqrt(0.25 * 0.75 / n);
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 3 * se);
}

TEST(Mdp, RewardMeanClt) {
  const MdpSpec m = two_by_two();
  const auto replay = ReplayModel::idealized({0.0, 0.0, 0.0, 1.0});
  Rng rng(2);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto t = sample_transition(m, replay, rng);
    ASSERT_EQ(t.s, 1);
    ASSERT_EQ(t.a, 1);
    sum += t.r;
  }
  EXPECT_NEAR(sum / n, 2.0, 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Mdp, PointMassSupport) {
  MdpSpec m = two_by_two();
  const auto support = enumerate_support(m, {0.0, 1.0, 0.0, 0.0});
  ASSERT_EQ(support.size(), 1u);
  EXPECT_EQ(support[0].s, 0);
  EXPECT_EQ(support[0].a, 1);
  EXPECT_EQ(support[0].s_next, 0);
  EXPECT_DOUBLE_EQ(support[0].weight, 1.0);
}

TEST(Mdp, SupportWeightsSumToOne) {
  const MdpSpec m = example_mdp();
  const std::vector<double> q = {0.1, 0.2, 0.05, 0.15, 0.3, 0.2};
  double total = 0.0;
  for (const auto& p : enumerate_support(m, q)) total += p.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Mdp, ReplayValidation) {
  const MdpSpec m = two_by_two();
  EXPECT_FALSE(validate_replay(m, ReplayModel::idealized({0.5, 0.5, 0.5, 0.5})).ok());
  EXPECT_FALSE(validate_replay(m, ReplayModel::idealized({1.0})).ok());
  EXPECT_TRUE(validate_replay(m, ReplayModel::online(10, 1.0)).ok());
  EXPECT_FALSE(validate_replay(m, ReplayModel::online(10, 0.0)).ok());
}

TEST(Mdp, ReplayBufferFifo) {
  ReplayBuffer buf(2);
  Rng rng(3);
  EXPECT_THROW(buf.sample(rng), std::logic_error);
  for (int i = 0; i < 3; ++i) buf.store({i, 0, static_cast<double>(i), 0});
  EXPECT_EQ(buf.size(), 2u);
  for (int k = 0; k < 50; ++k) EXPECT_GE(buf.sample(rng).s, 1);
  EXPECT_EQ(buf.latest().s, 2);
}

TEST(Mdp, JsonRoundTrip) {
  const MdpSpec m = example_mdp();
  const MdpSpec back = mdp_from_json(mdp_to_json(m));
  EXPECT_EQ(back.p, m.p);
  EXPECT_EQ(back.R, m.R);
  EXPECT_EQ(back.V, m.V);
  EXPECT_EQ(back.gamma, m.gamma);
}

TEST(Mdp, JsonShapeErrors) {
  auto j = mdp_to_json(example_mdp());
  j["p"].erase(0);
  EXPECT_THROW(mdp_from_json(j), std::invalid_argument);
}
