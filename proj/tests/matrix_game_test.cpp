#include <gtest/gtest.h>

#include <cmath>

#include "recip/matrix_game.hpp"
#include "recip/rng.hpp"

namespace {

using namespace recip::ipd;
using recip::Rng;

constexpr Probs<double> kAlwaysC{1, 1, 1, 1, 1};
constexpr Probs<double> kAlwaysD{0, 0, 0, 0, 0};
constexpr Probs<double> kTitForTat{1, 1, 0, 1, 0};

Logits random_logits(Rng& rng, double scale = 1.0) {
  Logits l{};
  for (auto& x : l) x = scale * rng.normal();
  return l;
}

Probs<double> sig(const Logits& l) { return Memory1Policy{l}.probs(); }

struct McEstimate {
  double mean1, se1, mean2, se2;
};

// Monte-Carlo oracle: batched rollouts of the memory-1 game, normalized
// discounted return truncated at `length` rounds.
McEstimate rollout_return(const Probs<double>& p1, const Probs<double>& p2, const PayoffMatrix& pay, double gamma,
                          int lanes, int length, Rng& rng, int start_state = kStart, int first_joint = -1) {
  double s1 = 0, ss1 = 0, s2 = 0, ss2 = 0;
  for (int lane = 0; lane < lanes; ++lane) {
    int state = start_state;
    double g1 = 0, g2 = 0, disc = 1;
    for (int t = 0; t < length; ++t) {
      int a1, a2;
      if (t == 0 && first_joint >= 0) {
        a1 = first_joint / 2;
        a2 = first_joint % 2;
      } else {
        a1 = rng.bernoulli(p1[state]) ? kCooperate : kDefect;
        // agent 2 reads the state with its own action first
        int own_view = state;
        if (state == kCD) own_view = kDC;
        else if (state == kDC) own_view = kCD;
        a2 = rng.bernoulli(p2[own_view]) ? kCooperate : kDefect;
      }
      g1 += disc * pay.r1[a1][a2];
      g2 += disc * pay.r2[a1][a2];
      disc *= gamma;
      state = 1 + 2 * a1 + a2;
    }
    s1 += g1; ss1 += g1 * g1; s2 += g2; ss2 += g2 * g2;
  }
  const double n = lanes;
  const double m1 = s1 / n, m2 = s2 / n;
  return {m1, std::sqrt((ss1 / n - m1 * m1) / n), m2, std::sqrt((ss2 / n - m2 * m2) / n)};
}

TEST(PayoffMatrix, DefaultsArePrisonersDilemma) {
  PayoffMatrix p;
  EXPECT_EQ(p.reward(0, kCooperate, kCooperate), -1);
  EXPECT_EQ(p.reward(0, kCooperate, kDefect), -3);
  EXPECT_EQ(p.reward(0, kDefect, kCooperate), 0);
  EXPECT_EQ(p.reward(0, kDefect, kDefect), -2);
  EXPECT_EQ(p.reward(1, kCooperate, kDefect), 0);
  EXPECT_EQ(p.reward(1, kDefect, kCooperate), -3);
}

TEST(InducedChain, RowsAreStochastic) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = induced_chain(sig(random_logits(rng, 3)), sig(random_logits(rng, 3)));
    double s0 = 0;
    for (double x : c.initial) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
      s0 += x;
    }
    EXPECT_NEAR(s0, 1.0, 1e-12);
    for (const auto& row : c.transition) {
      double s = 0;
      for (double x : row) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
        s += x;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(InducedChain, DegenerateAndUniformPolicies) {
  const auto dd = induced_chain(kAlwaysD, kAlwaysD);
  EXPECT_EQ(dd.initial[3], 1.0);
  for (const auto& row : dd.transition) EXPECT_EQ(row[3], 1.0);
  const auto cc = induced_chain(kAlwaysC, kAlwaysC);
  for (const auto& row : cc.transition) EXPECT_EQ(row[0], 1.0);
  const Probs<double> half{0.5, 0.5, 0.5, 0.5, 0.5};
  const auto u = induced_chain(half, half);
  for (const auto& row : u.transition)
    for (double x : row) EXPECT_EQ(x, 0.25);
}

TEST(InducedChain, AgentTwoReadsStatesFromItsOwnSide) {
  // Agent 2 cooperates only after (own C, opponent D), i.e. agent-1 state DC.
  const Probs<double> p2{0, 0, 1, 0, 0};
  const auto c = induced_chain(kAlwaysD, p2);
  EXPECT_EQ(c.transition[kDC - 1][kDC - 1], 1.0);  // DC -> DC
  EXPECT_EQ(c.transition[kCD - 1][kDD - 1], 1.0);  // CD -> DD
}

TEST(ExactReturn, StationaryOutcomes) {
  PayoffMatrix pay;
  const auto dd = exact_return(kAlwaysD, kAlwaysD, pay, 0.96);
  EXPECT_NEAR(dd.v1, -2.0, 1e-12);
  EXPECT_NEAR(dd.v2, -2.0, 1e-12);
  const auto cc = exact_return(kAlwaysC, kAlwaysC, pay, 0.96);
  EXPECT_NEAR(cc.v1, -1.0, 1e-12);
  EXPECT_NEAR(cc.v2, -1.0, 1e-12);
}

TEST(ExactReturn, TitForTatVersusAlwaysDefect) {
  // Round 1 pays (-3, 0), every later round (-2, -2):
  // v = (1 - g) * first + g * (-2).
  const double g = 0.96;
  const auto sol = exact_return(kTitForTat, kAlwaysD, PayoffMatrix{}, g);
  EXPECT_NEAR(sol.v1, (1 - g) * -3.0 + g * -2.0, 1e-12);
  EXPECT_NEAR(sol.v2, (1 - g) * 0.0 + g * -2.0, 1e-12);
  EXPECT_NEAR(sol.v1, -2.04, 1e-12);
  EXPECT_NEAR(sol.v2, -1.92, 1e-12);
}

TEST(ExactReturn, DistributionsSumToOneAndValuesInRange) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sol = exact_return(sig(random_logits(rng, 2)), sig(random_logits(rng, 2)), PayoffMatrix{}, 0.9);
    double s4 = 0, s5 = 0;
    for (double x : sol.state_distribution) s4 += x;
    for (double x : sol.occupancy) s5 += x;
    EXPECT_NEAR(s4, 1.0, 1e-12);
    EXPECT_NEAR(s5, 1.0, 1e-12);
    EXPECT_GE(sol.v1, -3.0);
    EXPECT_LE(sol.v1, 0.0);
  }
}

TEST(ExactReturn, RejectsDiscountOfOne) {
  EXPECT_THROW(exact_return(kAlwaysC, kAlwaysC, PayoffMatrix{}, 1.0), recip::ConfigError);
}

TEST(ExactReturn, MatchesMonteCarloRollouts) {
  Rng rng(3);
  const double gamma = 0.96;
  for (int trial = 0; trial < 4; ++trial) {
    const auto p1 = sig(random_logits(rng));
    const auto p2 = sig(random_logits(rng));
    const auto sol = exact_return(p1, p2, PayoffMatrix{}, gamma);
    const auto mc = rollout_return(p1, p2, PayoffMatrix{}, gamma, 4096, 512, rng);
    EXPECT_LE(std::abs((1 - gamma) * mc.mean1 - sol.v1), 3 * (1 - gamma) * mc.se1 + 1e-9);
    EXPECT_LE(std::abs((1 - gamma) * mc.mean2 - sol.v2), 3 * (1 - gamma) * mc.se2 + 1e-9);
  }
}

TEST(ExactQ, MyopicLimitIsImmediatePayoff) {
  Rng rng(4);
  PayoffMatrix pay;
  const auto p1 = sig(random_logits(rng));
  const auto p2 = sig(random_logits(rng));
  for (int s = 0; s < kNumStates; ++s)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) {
        const auto q = exact_q(p1, p2, pay, 0.0, s, a1, a2);
        EXPECT_DOUBLE_EQ(q.q1, pay.r1[a1][a2]);
        EXPECT_DOUBLE_EQ(q.q2, pay.r2[a1][a2]);
      }
}

TEST(ExactQ, StationaryDefectionNormalizesToMinusTwo) {
  const double g = 0.96;
  const auto q = exact_q(kAlwaysD, kAlwaysD, PayoffMatrix{}, g, kDD, kDefect, kDefect);
  EXPECT_NEAR((1 - g) * q.q1, -2.0, 1e-12);
  EXPECT_NEAR((1 - g) * q.q2, -2.0, 1e-12);
}

TEST(ExactQ, BellmanConsistency) {
  Rng rng(5);
  const double g = 0.9;
  const auto p1 = sig(random_logits(rng));
  const auto p2 = sig(random_logits(rng));
  const auto t = exact_q_table(p1, p2, PayoffMatrix{}, g);
  for (int s = 0; s < kNumStates; ++s) {
    const double c1 = p1[s], c2 = p2[swap_perspective(s)];
    for (int agent = 0; agent < 2; ++agent) {
      double v = 0;
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
          v += (a1 == kCooperate ? c1 : 1 - c1) * (a2 == kCooperate ? c2 : 1 - c2) * t.at(agent, a1, a2);
      EXPECT_NEAR(v, t.v[agent][s], 1e-10);
    }
  }
  const auto sol = exact_return(p1, p2, PayoffMatrix{}, g);
  EXPECT_NEAR((1 - g) * t.v[0][kStart], sol.v1, 1e-12);
}

TEST(ExactQ, MatchesMonteCarloFromFixedFirstAction) {
  Rng rng(6);
  const double g = 0.9;
  const auto p1 = sig(random_logits(rng));
  const auto p2 = sig(random_logits(rng));
  for (int joint : {0, 2}) {
    const int state = joint == 0 ? kCD : kDD;
    const auto q = exact_q(p1, p2, PayoffMatrix{}, g, state, first_action(joint), second_action(joint));
    const auto mc = rollout_return(p1, p2, PayoffMatrix{}, g, 100000, 200, rng, state, joint);
    EXPECT_LE(std::abs(mc.mean1 - q.q1), 3 * mc.se1);
    EXPECT_LE(std::abs(mc.mean2 - q.q2), 3 * mc.se2);
  }
}

Logits central_difference(const std::function<double(const Logits&)>& f, const Logits& x, double h = 1e-5) {
  Logits g{};
  for (int k = 0; k < kNumStates; ++k) {
    Logits xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

void expect_relative(const Logits& a, const Logits& b, double rel, double abs_floor = 1e-10) {
  for (int k = 0; k < kNumStates; ++k)
    EXPECT_LE(std::abs(a[k] - b[k]), rel * std::max(std::abs(a[k]), std::abs(b[k])) + abs_floor) << "k=" << k;
}

TEST(ExactGradient, MatchesFiniteDifferences) {
  Rng rng(7);
  PayoffMatrix pay;
  const double g = 0.96;
  for (int trial = 0; trial < 10; ++trial) {
    const auto t1 = random_logits(rng), t2 = random_logits(rng);
    for (int agent = 0; agent < 2; ++agent)
      for (int wrt = 0; wrt < 2; ++wrt) {
        const auto grad = value_gradient(t1, t2, pay, g, agent, wrt);
        const auto fd = central_difference(
            [&](const Logits& x) {
              const auto s = wrt == 0 ? exact_return(sig(x), sig(t2), pay, g) : exact_return(sig(t1), sig(x), pay, g);
              return agent == 0 ? s.v1 : s.v2;
            },
            wrt == 0 ? t1 : t2);
        expect_relative(grad, fd, 1e-5);
      }
  }
}

TEST(ExactGradient, SaturatedDefectorsHaveVanishingGradient) {
  const Logits d{-20, -20, -20, -20, -20};
  for (int agent = 0; agent < 2; ++agent)
    for (double x : exact_gradient(d, d, PayoffMatrix{}, 0.96, agent)) EXPECT_NEAR(x, 0.0, 1e-7);
}

TEST(ExactGradient, OpponentLogitsInfluenceOwnReturn) {
  Rng rng(8);
  const auto t1 = random_logits(rng), t2 = random_logits(rng);
  const auto g = value_gradient(t1, t2, PayoffMatrix{}, 0.96, 0, 1);
  double norm = 0;
  for (double x : g) norm += x * x;
  EXPECT_GT(norm, 1e-6);
}

TEST(LolaGradient, ZeroLookaheadIsNaiveGradient) {
  Rng rng(9);
  const auto t1 = random_logits(rng), t2 = random_logits(rng);
  for (int which = 0; which < 2; ++which) {
    const auto lola = lola_gradient(t1, t2, 0.0, PayoffMatrix{}, 0.96, which);
    const auto nl = exact_gradient(t1, t2, PayoffMatrix{}, 0.96, which);
    for (int k = 0; k < kNumStates; ++k) EXPECT_DOUBLE_EQ(lola[k], nl[k]);
  }
}

TEST(LolaGradient, MatchesTwoStageFiniteDifference) {
  // Oracle: simulate the opponent's step with a finite-difference gradient,
  // then finite-difference the composed objective.
  Rng rng(10);
  PayoffMatrix pay;
  const double g = 0.96, alpha = 0.8;
  for (int trial = 0; trial < 5; ++trial) {
    const auto t1 = random_logits(rng), t2 = random_logits(rng);
    auto composed = [&](const Logits& x1) {
      const auto opp_grad = central_difference(
          [&](const Logits& y) { return exact_return(sig(x1), sig(y), pay, g).v2; }, t2, 1e-4);
      Logits shifted = t2;
      for (int k = 0; k < kNumStates; ++k) shifted[k] += alpha * opp_grad[k];
      return exact_return(sig(x1), sig(shifted), pay, g).v1;
    };
    expect_relative(lola_gradient(t1, t2, alpha, pay, g, 0), central_difference(composed, t1, 1e-4), 1e-4, 1e-7);
  }
}

TEST(LolaGradient, SymmetricPlayersGetEqualGradients) {
  Rng rng(11);
  const auto t = random_logits(rng);
  const auto g1 = lola_gradient(t, t, 1.0, PayoffMatrix{}, 0.96, 0);
  const auto g2 = lola_gradient(t, t, 1.0, PayoffMatrix{}, 0.96, 1);
  for (int k = 0; k < kNumStates; ++k) EXPECT_NEAR(g1[k], g2[k], 1e-12);
}

}  // namespace
