#include <gtest/gtest.h>

#include <cmath>

#include "recip/influence/analytic.hpp"
#include "recip/influence/learned.hpp"
#include "recip/influence/reciprocity.hpp"

namespace {

using namespace recip;
using namespace recip::influence;
using ipd::kCooperate;
using ipd::kDefect;
using ipd::Probs;

Probs<double> random_probs(Rng& rng) {
  Probs<double> p{};
  for (auto& x : p) x = 0.05 + 0.9 * rng.uniform();
  return p;
}

TEST(AnalyticVi, OneShotCooperationAgainstUniformOpponent) {
  // gamma = 0: VI_{i|rc}(C, C) = r_rc(C, C) - E_{a_i}[r_rc(C, a_i)] = -1 - (-2).
  const Probs<double> rc{0.3, 0.3, 0.3, 0.3, 0.3};
  const Probs<double> half{0.5, 0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(analytic_vi(rc, half, ipd::PayoffMatrix{}, 0.0, ipd::kStart, kCooperate, kCooperate, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(analytic_vi(rc, half, ipd::PayoffMatrix{}, 0.0, ipd::kStart, kCooperate, kDefect, 1, 0), -1.0);
}

TEST(AnalyticVi, CertainActionHasNoInfluence) {
  const Probs<double> rc{0.3, 0.3, 0.3, 0.3, 0.3};
  const Probs<double> always_c{1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(analytic_vi(rc, always_c, ipd::PayoffMatrix{}, 0.0, ipd::kStart, kCooperate, kCooperate, 1, 0), 0.0);
}

TEST(AnalyticVi, SelfInfluenceIsComaAdvantage) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p1 = random_probs(rng), p2 = random_probs(rng);
    for (int s = 0; s < ipd::kNumStates; ++s)
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
          for (int k = 0; k < 2; ++k)
            EXPECT_EQ(analytic_vi(p1, p2, ipd::PayoffMatrix{}, 0.96, s, a1, a2, k, k),
                      coma_advantage(p1, p2, ipd::PayoffMatrix{}, 0.96, s, a1, a2, k));
  }
}

TEST(AnalyticVi, ZeroMeanUnderInfluencerPolicy) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p1 = random_probs(rng), p2 = random_probs(rng);
    const auto q = ipd::exact_q_table(p1, p2, ipd::PayoffMatrix{}, 0.96);
    for (int s = 0; s < ipd::kNumStates; ++s)
      for (int influencer = 0; influencer < 2; ++influencer)
        for (int influenced = 0; influenced < 2; ++influenced)
          for (int other = 0; other < 2; ++other) {
            double mean = 0;
            for (int x = 0; x < 2; ++x) {
              const int a1 = influencer == 0 ? x : other, a2 = influencer == 0 ? other : x;
              mean += action_prob(influencer == 0 ? p1 : p2, influencer, s, x) *
                      analytic_vi(q, p1, p2, s, a1, a2, influencer, influenced);
            }
            EXPECT_NEAR(mean, 0.0, 1e-10);
          }
  }
}

TEST(AnalyticVi, CounterfactualIsMarginalOfJointQ) {
  // The baseline equals sum_x pi_i(x|s) Q_j(s, (a_j, x)) computed by hand.
  Rng rng(3);
  const auto p1 = random_probs(rng), p2 = random_probs(rng);
  const ipd::PayoffMatrix pay;
  for (int s = 0; s < ipd::kNumStates; ++s) {
    const double c2 = p2[ipd::swap_perspective(s)];
    const auto qc = ipd::exact_q(p1, p2, pay, 0.9, s, kDefect, kCooperate);
    const auto qd = ipd::exact_q(p1, p2, pay, 0.9, s, kDefect, kDefect);
    const double baseline = c2 * qc.q1 + (1 - c2) * qd.q1;
    EXPECT_NEAR(analytic_vi(p1, p2, pay, 0.9, s, kDefect, kCooperate, 1, 0), qc.q1 - baseline, 1e-12);
  }
}

InfluenceReplayBuffer<std::uint8_t> buffer_from(const std::vector<std::array<int, 4>>& rows) {
  // rows: state, a1, a2, lane-less single step episodes
  InfluenceReplayBuffer<std::uint8_t> buf(5);
  EpisodeRecord<std::uint8_t> ep;
  ep.lanes = 1;
  ep.horizon = static_cast<int>(rows.size());
  for (const auto& r : rows) {
    env::JointTransition<std::uint8_t> tr;
    tr.state = static_cast<std::uint8_t>(r[0]);
    tr.actions = {r[1], r[2]};
    tr.next = static_cast<std::uint8_t>(ipd::state_after(r[1], r[2]));
    ep.steps.push_back(tr);
  }
  buf.push(ep);
  return buf;
}

TEST(PolicyEstimate, FrequenciesWithUniformFallback) {
  const auto buf = buffer_from({{ipd::kDD, 0, 1}, {ipd::kDD, 1, 1}, {ipd::kDD, 0, 1}, {ipd::kCD, 1, 0}});
  const auto est = estimate_policies(buf);
  EXPECT_DOUBLE_EQ(est.probs[0][ipd::kDD], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(est.probs[1][ipd::kDD], 0.0);
  // agent 2 saw CD from its own side as DC
  EXPECT_DOUBLE_EQ(est.probs[1][ipd::kDC], 1.0);
  EXPECT_DOUBLE_EQ(est.probs[0][ipd::kCD], 0.0);
  EXPECT_DOUBLE_EQ(est.probs[0][ipd::kStart], 0.5);
  EXPECT_DOUBLE_EQ(est.probs[1][ipd::kCC], 0.5);
}

TEST(AnalyticInfluence, UnobservedStateUsesUniformOpponent) {
  AnalyticInfluence model({ipd::PayoffMatrix{}, 0.0, 1, 1.0});
  model.refit(buffer_from({{ipd::kDD, 1, 1}}), 0);
  // Start never observed: opponent treated as 50/50.
  // r_1(C, D) - 0.5 (r_1(C, C) + r_1(C, D)) = -3 - (-2)
  EXPECT_DOUBLE_EQ(model.value_influence(ipd::kStart, kCooperate, kDefect, 1, 0), -1.0);
}

TEST(AnalyticInfluence, TrueEstimatesReproduceExactVi) {
  Rng rng(4);
  const auto p1 = random_probs(rng), p2 = random_probs(rng);
  AnalyticInfluence model({ipd::PayoffMatrix{}, 0.96, 10, 1.0});
  model.set_policies({p1, p2});
  for (int s = 0; s < ipd::kNumStates; ++s)
    EXPECT_DOUBLE_EQ(model.value_influence(s, 1, 0, 0, 1), analytic_vi(p1, p2, ipd::PayoffMatrix{}, 0.96, s, 1, 0, 0, 1));
}

TEST(AnalyticInfluence, EstimatesOnlyChangeAtPeriodBoundaries) {
  AnalyticInfluence model({ipd::PayoffMatrix{}, 0.96, 3, 1.0});
  EXPECT_THROW(model.value_influence(0, 0, 0, 0, 1), UsageError);
  model.refit(buffer_from({{ipd::kStart, 0, 0}}), 0);
  const double before = model.value_influence(ipd::kCC, 0, 1, 1, 0);
  model.refit(buffer_from({{ipd::kStart, 1, 1}, {ipd::kCC, 1, 1}}), 1);
  model.refit(buffer_from({{ipd::kStart, 1, 1}, {ipd::kCC, 1, 1}}), 2);
  EXPECT_EQ(model.value_influence(ipd::kCC, 0, 1, 1, 0), before);
  model.refit(buffer_from({{ipd::kStart, 1, 1}, {ipd::kCC, 1, 1}}), 3);
  EXPECT_NE(model.value_influence(ipd::kCC, 0, 1, 1, 0), before);
}

TEST(InfluenceLedger, BalanceArithmetic) {
  InfluenceLedger ledger(2, 1.0);
  EXPECT_EQ(ledger.update_balance(0, 0.4, 0.4), 0.0);
  EXPECT_EQ(ledger.update_balance(1, 1.0, 0.25), 0.75);
}

TEST(InfluenceLedger, BalanceTelescopes) {
  Rng rng(5);
  InfluenceLedger ledger(1, 1.0);
  double expected = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double x = rng.normal(), y = rng.normal();
    ledger.update_balance(0, x, y);
    expected += x - y;
  }
  EXPECT_NEAR(ledger.balance(0), expected, 1e-9);
}

TEST(ReciprocalReward, ProductOfBalanceAndInfluence) {
  EXPECT_EQ(reciprocal_reward(5.0, 0.0, 3.7), 0.0);
  EXPECT_EQ(reciprocal_reward(1.0, 0.75, 1.0), 0.75);
  EXPECT_EQ(reciprocal_reward(5.0, -2.0, 0.5), -5.0);
}

TEST(ReciprocalReward, SignLawOverAllSignCombinations) {
  for (double b : {-2.5, -0.1, 0.3, 4.0})
    for (double vi : {-1.5, -0.2, 0.01, 2.0}) {
      const double r = reciprocal_reward(1.0, b, vi);
      EXPECT_EQ(std::signbit(r), std::signbit(b) != std::signbit(vi));
      EXPECT_NE(r, 0.0);
    }
}

TEST(AnnotateEpisode, ManualThreeStepRecurrence) {
  InfluenceTrace tr{1, 3, {1.0, -0.5, 0.25}, {0.25, 0.5, -1.0}};
  InfluenceLedger ledger(1, 2.0);
  const auto out = annotate_episode(tr, ledger);
  // B: 0 -> 0.75 -> -0.25 -> 1.0; r = w * B_prev * VI_rc|i
  EXPECT_DOUBLE_EQ(out.rewards[0], 0.0);
  EXPECT_DOUBLE_EQ(out.rewards[1], 2.0 * 0.75 * 0.5);
  EXPECT_DOUBLE_EQ(out.rewards[2], 2.0 * -0.25 * -1.0);
  EXPECT_DOUBLE_EQ(ledger.balance(0), 1.0);
  EXPECT_DOUBLE_EQ(out.total, 0.75 + 0.5);
}

TEST(AnnotateEpisode, ZeroInfluenceGivesZeroRewards) {
  InfluenceTrace tr{2, 4, std::vector<double>(8, 0.0), std::vector<double>(8, 0.0)};
  InfluenceLedger ledger(2, 5.0);
  ledger.set_balance(1, 3.0);
  const auto out = annotate_episode(tr, ledger);
  for (double r : out.rewards) EXPECT_EQ(r, 0.0);
  EXPECT_EQ(ledger.balance(1), 3.0);
}

TEST(AnnotateEpisode, SwappingRolesNegatesBalance) {
  Rng rng(6);
  InfluenceTrace a{3, 10, {}, {}};
  for (int i = 0; i < 30; ++i) {
    a.opponent_on_self.push_back(rng.normal());
    a.self_on_opponent.push_back(rng.normal());
  }
  InfluenceTrace b{3, 10, a.self_on_opponent, a.opponent_on_self};
  InfluenceLedger la(3, 1.0), lb(3, 1.0);
  annotate_episode(a, la);
  annotate_episode(b, lb);
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(la.balance(l), -lb.balance(l), 1e-12);
}

TEST(ReplayBuffer, EvictsOldestEpisodeAndSamplesUniformly) {
  InfluenceReplayBuffer<std::uint8_t> buf(2);
  for (int e = 0; e < 3; ++e) {
    EpisodeRecord<std::uint8_t> ep;
    ep.index = e;
    ep.lanes = 2;
    ep.horizon = 2;
    ep.steps.resize(4);
    for (int i = 0; i < 4; ++i) ep.steps[i].step = i;
    buf.push(ep);
  }
  ASSERT_EQ(buf.episodes().size(), 2u);
  EXPECT_EQ(buf.episodes().front().index, 1);
  Rng rng(7);
  std::array<int, 8> hits{};
  for (const auto& r : buf.sample(80000, rng)) ++hits[(r.episode->index - 1) * 4 + r.index];
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);  // ~4 sigma
}

TEST(ReplayBuffer, RejectsIncompleteEpisodes) {
  InfluenceReplayBuffer<std::uint8_t> buf(1);
  EpisodeRecord<std::uint8_t> ep;
  ep.lanes = 2;
  ep.horizon = 2;
  ep.steps.resize(3);
  EXPECT_THROW(buf.push(ep), UsageError);
}

TEST(LearnedInfluence, RegressesDeterministicRewardToFixedPoint) {
  InfluenceReplayBuffer<std::uint8_t> buf(1);
  EpisodeRecord<std::uint8_t> ep;
  ep.lanes = 1;
  ep.horizon = 1;
  env::JointTransition<std::uint8_t> tr;
  tr.state = ipd::kStart;
  tr.actions = {0, 1};
  tr.rewards = {1.0, 1.0};
  ep.steps.push_back(tr);
  ep.fill_returns(0.0);
  buf.push(ep);
  IpdLearnedInfluence model({}, {{8}, 0.01, 1500, 16, 1}, Rng(8));
  EXPECT_THROW(model.value_influence(ipd::kStart, 0, 1, 1, 0), UsageError);
  model.refit(buf, 0);
  EXPECT_NEAR(model.joint_q(0, ipd::kStart, 0, 1), 1.0, 1e-3);
  EXPECT_NEAR(model.counterfactual_q(1, ipd::kStart, 1), 1.0, 1e-3);
}

// Simulated memory-1 play; returns are computed over `length` rounds, but
// only the first `keep` rounds are stored so their targets approximate
// infinite-horizon values.
InfluenceReplayBuffer<std::uint8_t> simulated_ipd(const Probs<double>& p1, const Probs<double>& p2, double gamma,
                                                  int lanes, int length, int keep, Rng& rng) {
  EpisodeRecord<std::uint8_t> ep;
  ep.lanes = lanes;
  ep.horizon = length;
  ep.steps.resize(static_cast<std::size_t>(lanes) * length);
  const ipd::PayoffMatrix pay;
  for (int l = 0; l < lanes; ++l) {
    int s = ipd::kStart;
    for (int t = 0; t < length; ++t) {
      auto& tr = ep.steps[static_cast<std::size_t>(t) * lanes + l];
      const int a1 = rng.bernoulli(p1[s]) ? 0 : 1;
      const int a2 = rng.bernoulli(p2[ipd::swap_perspective(s)]) ? 0 : 1;
      tr.state = static_cast<std::uint8_t>(s);
      tr.actions = {a1, a2};
      tr.rewards = {pay.r1[a1][a2], pay.r2[a1][a2]};
      s = ipd::state_after(a1, a2);
      tr.next = static_cast<std::uint8_t>(s);
    }
  }
  ep.fill_returns(gamma);
  ep.steps.resize(static_cast<std::size_t>(lanes) * keep);
  ep.returns.resize(ep.steps.size());
  ep.horizon = keep;
  InfluenceReplayBuffer<std::uint8_t> buf(1);
  buf.push(std::move(ep));
  return buf;
}

TEST(LearnedInfluence, MatchesExactQInIpd) {
  Rng rng(9);
  const double gamma = 0.96;
  const Probs<double> p1{0.5, 0.7, 0.3, 0.6, 0.4}, p2{0.5, 0.4, 0.6, 0.5, 0.5};
  const auto buf = simulated_ipd(p1, p2, gamma, 4000, 400, 20, rng);
  IpdLearnedInfluence model({}, {{32, 32}, 0.01, 6000, 512, 1}, Rng(10));
  model.refit(buf, 0);
  const auto exact = ipd::exact_q_table(p1, p2, ipd::PayoffMatrix{}, gamma);
  for (int s = 0; s < ipd::kNumStates; ++s)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int j = 0; j < 2; ++j)
          EXPECT_NEAR((1 - gamma) * model.joint_q(j, static_cast<std::uint8_t>(s), a1, a2),
                      (1 - gamma) * exact.at(j, a1, a2), 0.05)
              << "state " << s << " a " << a1 << a2 << " agent " << j;
}

TEST(LearnedInfluence, CounterfactualMatchesJointWhenOpponentIsIrrelevant) {
  // Agent 1's return depends only on its own action.
  InfluenceReplayBuffer<std::uint8_t> buf(1);
  EpisodeRecord<std::uint8_t> ep;
  ep.lanes = 400;
  ep.horizon = 1;
  Rng rng(11);
  for (int l = 0; l < 400; ++l) {
    env::JointTransition<std::uint8_t> tr;
    tr.state = ipd::kStart;
    tr.actions = {l % 2, (l / 2) % 2};
    tr.rewards = {tr.actions[0] == 0 ? 2.0 : -1.0, 0.0};
    ep.steps.push_back(tr);
  }
  ep.fill_returns(0.9);
  buf.push(ep);
  IpdLearnedInfluence model({}, {{16}, 0.01, 2000, 128, 1}, Rng(12));
  model.refit(buf, 0);
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) {
      EXPECT_NEAR(model.joint_q(0, ipd::kStart, a1, a2), model.counterfactual_q(0, ipd::kStart, a1), 0.02);
      EXPECT_NEAR(model.value_influence(ipd::kStart, a1, a2, 1, 0), 0.0, 0.02);
    }
}

TEST(LearnedInfluence, TargetsAreFrozenBetweenUpdates) {
  Rng rng(13);
  const Probs<double> p{0.5, 0.5, 0.5, 0.5, 0.5};
  const auto buf = simulated_ipd(p, p, 0.9, 50, 10, 10, rng);
  IpdLearnedInfluence model({}, {{8}, 0.01, 5, 32, 4}, Rng(14));
  model.refit(buf, 0);
  const double vi = model.value_influence(ipd::kCC, 0, 1, 1, 0);
  const double live = model.joint_q(0, ipd::kCC, 0, 1, false);
  model.refit(buf, 1);
  model.refit(buf, 2);
  EXPECT_EQ(model.value_influence(ipd::kCC, 0, 1, 1, 0), vi);
  EXPECT_NE(model.joint_q(0, ipd::kCC, 0, 1, false), live);
  model.refit(buf, 4);
  EXPECT_NE(model.value_influence(ipd::kCC, 0, 1, 1, 0), vi);
}

}  // namespace
