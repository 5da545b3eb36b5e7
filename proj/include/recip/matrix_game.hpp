#pragma once

#include <array>
#include <cmath>
#include <string>

#include "recip/dual.hpp"
#include "recip/error.hpp"

// Exact analytic solution of the memory-1 iterated prisoner's dilemma.
//
// States are indexed (start, CC, CD, DC, DD) with the joint action written
// from agent 1's point of view. Policies are always stored from their owner's
// point of view (own action first), so agent 2's cooperation probability in
// state CD is its pDC entry.
namespace recip::ipd {

inline constexpr int kCooperate = 0;
inline constexpr int kDefect = 1;

enum State : int { kStart = 0, kCC = 1, kCD = 2, kDC = 3, kDD = 4 };
inline constexpr int kNumStates = 5;
inline constexpr int kNumJoint = 4;

inline constexpr int joint_index(int a1, int a2) { return 2 * a1 + a2; }
inline constexpr int state_after(int a1, int a2) { return 1 + joint_index(a1, a2); }
inline constexpr int first_action(int joint) { return joint / 2; }
inline constexpr int second_action(int joint) { return joint % 2; }

// CD <-> DC; start, CC and DD are symmetric.
inline constexpr int swap_perspective(int s) { return s == kCD ? kDC : (s == kDC ? kCD : s); }

inline const char* state_name(int s) {
  static constexpr const char* names[] = {"start", "CC", "CD", "DC", "DD"};
  return names[s];
}

struct PayoffMatrix {
  // r1[a1][a2]: reward to agent 1; r2[a1][a2]: reward to agent 2.
  std::array<std::array<double, 2>, 2> r1{{{-1.0, -3.0}, {0.0, -2.0}}};
  std::array<std::array<double, 2>, 2> r2{{{-1.0, 0.0}, {-3.0, -2.0}}};

  double reward(int agent, int a1, int a2) const { return agent == 0 ? r1[a1][a2] : r2[a1][a2]; }

  // Symmetric game from the row player's (CC, CD, DC, DD) payoffs.
  static PayoffMatrix symmetric(double cc, double cd, double dc, double dd) {
    PayoffMatrix p;
    p.r1 = {{{cc, cd}, {dc, dd}}};
    p.r2 = {{{cc, dc}, {cd, dd}}};
    return p;
  }
};

template <class T>
using Probs = std::array<T, kNumStates>;
using Logits = std::array<double, kNumStates>;

// Memory-1 strategy stored as unconstrained logits; cooperation
// probabilities are their sigmoids.
struct Memory1Policy {
  Logits logits{};

  Probs<double> probs() const {
    Probs<double> p{};
    for (int s = 0; s < kNumStates; ++s) p[s] = sigmoid(logits[s]);
    return p;
  }

  static Memory1Policy from_probs(const Probs<double>& p, double saturation = 20.0) {
    Memory1Policy out;
    for (int s = 0; s < kNumStates; ++s) {
      if (p[s] <= 0.0)
        out.logits[s] = -saturation;
      else if (p[s] >= 1.0)
        out.logits[s] = saturation;
      else
        out.logits[s] = std::log(p[s] / (1.0 - p[s]));
    }
    return out;
  }
};

// Extra reward per (state, joint action) for one agent.
using StateJointTable = std::array<std::array<double, kNumJoint>, kNumStates>;

template <class T>
using Matrix5 = std::array<std::array<T, kNumStates>, kNumStates>;

// Transition matrix over the five states; row `start` is the distribution of
// the first joint action, nothing transitions into `start`.
template <class T>
Matrix5<T> chain5(const Probs<T>& p1, const Probs<T>& p2) {
  Matrix5<T> P{};
  for (int s = 0; s < kNumStates; ++s) {
    for (int s2 = 0; s2 < kNumStates; ++s2) P[s][s2] = T(0.0);
    const T q1 = p1[s];
    const T q2 = p2[swap_perspective(s)];
    P[s][kCC] = q1 * q2;
    P[s][kCD] = q1 * (1.0 - q2);
    P[s][kDC] = (1.0 - q1) * q2;
    P[s][kDD] = (1.0 - q1) * (1.0 - q2);
  }
  return P;
}

// Solves A x = b for a small dense system by Gaussian elimination. A is
// strictly diagonally dominant for the systems built here, so no pivoting.
template <class T, std::size_t N>
std::array<T, N> solve(std::array<std::array<T, N>, N> a, std::array<T, N> b) {
  for (std::size_t k = 0; k < N; ++k) {
    if (std::abs(value_of(a[k][k])) < 1e-14) throw ConfigError("matrix game: singular (I - gamma P)");
    for (std::size_t i = k + 1; i < N; ++i) {
      const T f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < N; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::array<T, N> x{};
  for (std::size_t k = N; k-- > 0;) {
    T acc = b[k];
    for (std::size_t j = k + 1; j < N; ++j) acc -= a[k][j] * x[j];
    x[k] = acc / a[k][k];
  }
  return x;
}

inline void check_discount(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("matrix game: discount must lie in [0, 1)");
}

// Raw discounted values V(s) = sum_a P(a|s) [R(s,a) + gamma V(next(a))].
template <class T, class R>
Probs<T> state_values(const Matrix5<T>& P, const R& reward, double gamma) {
  Matrix5<T> a{};
  Probs<T> b{};
  for (int s = 0; s < kNumStates; ++s) {
    b[s] = T(0.0);
    for (int s2 = 0; s2 < kNumStates; ++s2) a[s][s2] = (s == s2 ? T(1.0) : T(0.0)) - gamma * P[s][s2];
    for (int j = 0; j < kNumJoint; ++j) b[s] += P[s][1 + j] * reward(s, j);
  }
  return solve(a, b);
}

struct InducedChain {
  std::array<std::array<double, 4>, 4> transition{};
  std::array<double, 4> initial{};
};

inline InducedChain induced_chain(const Probs<double>& p1, const Probs<double>& p2) {
  const auto P = chain5(p1, p2);
  InducedChain c;
  for (int j = 0; j < 4; ++j) {
    c.initial[j] = P[kStart][1 + j];
    for (int k = 0; k < 4; ++k) c.transition[j][k] = P[1 + j][1 + k];
  }
  return c;
}
inline InducedChain induced_chain(const Memory1Policy& p1, const Memory1Policy& p2) {
  return induced_chain(p1.probs(), p2.probs());
}

struct GameSolution {
  double v1 = 0.0;  // (1 - gamma)-normalized return of agent 1
  double v2 = 0.0;
  // Normalized discounted occupancy of (CC, CD, DC, DD) over rounds 1, 2, ...
  std::array<double, 4> state_distribution{};
  // Same over all five states including the start (sums to 1).
  std::array<double, 5> occupancy{};
};

inline GameSolution exact_return(const Probs<double>& p1, const Probs<double>& p2, const PayoffMatrix& payoffs,
                                 double gamma) {
  check_discount(gamma);
  const auto P = chain5(p1, p2);
  GameSolution sol;
  const auto v1 = state_values(P, [&](int, int j) { return payoffs.r1[first_action(j)][second_action(j)]; }, gamma);
  const auto v2 = state_values(P, [&](int, int j) { return payoffs.r2[first_action(j)][second_action(j)]; }, gamma);
  sol.v1 = (1.0 - gamma) * v1[kStart];
  sol.v2 = (1.0 - gamma) * v2[kStart];

  // occupancy^T (I - gamma P) = (1 - gamma) e_start^T
  Matrix5<double> at{};
  Probs<double> rhs{};
  for (int s = 0; s < kNumStates; ++s)
    for (int s2 = 0; s2 < kNumStates; ++s2) at[s][s2] = (s == s2 ? 1.0 : 0.0) - gamma * P[s2][s];
  rhs[kStart] = 1.0 - gamma;
  sol.occupancy = solve(at, rhs);

  // rounds >= 1: d0^T (I - gamma P4)^-1 scaled by (1 - gamma)
  std::array<std::array<double, 4>, 4> a4{};
  std::array<double, 4> d0{};
  for (int j = 0; j < 4; ++j) {
    d0[j] = (1.0 - gamma) * P[kStart][1 + j];
    for (int k = 0; k < 4; ++k) a4[j][k] = (j == k ? 1.0 : 0.0) - gamma * P[1 + k][1 + j];
  }
  sol.state_distribution = solve(a4, d0);
  return sol;
}
inline GameSolution exact_return(const Memory1Policy& p1, const Memory1Policy& p2, const PayoffMatrix& payoffs,
                                 double gamma) {
  return exact_return(p1.probs(), p2.probs(), payoffs, gamma);
}

struct QPair {
  double q1 = 0.0;
  double q2 = 0.0;
};

// Raw (undiscounted-scale) state-action values: immediate payoff plus gamma
// times the continuation value of the state the joint action leads to.
// Multiply by (1 - gamma) to compare with exact_return.
struct QTable {
  // q[agent][joint action]; for the IPD the value does not depend on the
  // state the action is taken in.
  std::array<std::array<double, kNumJoint>, 2> q{};
  // Raw continuation values per state, per agent.
  std::array<Probs<double>, 2> v{};

  double at(int agent, int a1, int a2) const { return q[agent][joint_index(a1, a2)]; }
};

inline QTable exact_q_table(const Probs<double>& p1, const Probs<double>& p2, const PayoffMatrix& payoffs,
                            double gamma) {
  check_discount(gamma);
  const auto P = chain5(p1, p2);
  QTable t;
  for (int agent = 0; agent < 2; ++agent) {
    t.v[agent] = state_values(
        P, [&](int, int j) { return payoffs.reward(agent, first_action(j), second_action(j)); }, gamma);
    for (int j = 0; j < kNumJoint; ++j)
      t.q[agent][j] = payoffs.reward(agent, first_action(j), second_action(j)) + gamma * t.v[agent][1 + j];
  }
  return t;
}

inline QPair exact_q(const Probs<double>& p1, const Probs<double>& p2, const PayoffMatrix& payoffs, double gamma,
                     int state, int a1, int a2) {
  if (state < 0 || state >= kNumStates) throw ConfigError("exact_q: state out of range");
  if (a1 < 0 || a1 > 1 || a2 < 0 || a2 > 1) throw ConfigError("exact_q: action out of range");
  const auto t = exact_q_table(p1, p2, payoffs, gamma);
  return {t.at(0, a1, a2), t.at(1, a1, a2)};
}

// Normalized return of `agent` as a differentiable function of both logit
// vectors, optionally with an extra per-(state, joint action) reward.
template <class T>
T normalized_value(const Probs<T>& logits1, const Probs<T>& logits2, const PayoffMatrix& payoffs, double gamma,
                   int agent, const StateJointTable* extra = nullptr, double extra_weight = 0.0) {
  Probs<T> p1{}, p2{};
  for (int s = 0; s < kNumStates; ++s) {
    p1[s] = sigmoid(logits1[s]);
    p2[s] = sigmoid(logits2[s]);
  }
  const auto P = chain5(p1, p2);
  const auto values = state_values(
      P,
      [&](int s, int j) {
        double r = payoffs.reward(agent, first_action(j), second_action(j));
        if (extra) r += extra_weight * (*extra)[s][j];
        return T(r);
      },
      gamma);
  return (1.0 - gamma) * values[kStart];
}

template <class T>
Probs<T> lift(const Logits& x) {
  Probs<T> out{};
  for (int s = 0; s < kNumStates; ++s) out[s] = T(x[s]);
  return out;
}

// d v_agent / d logits_wrt, by forward-mode differentiation.
inline Logits value_gradient(const Logits& theta1, const Logits& theta2, const PayoffMatrix& payoffs, double gamma,
                             int agent, int wrt, const StateJointTable* extra = nullptr, double extra_weight = 0.0) {
  check_discount(gamma);
  using D = Dual<double>;
  Logits g{};
  for (int k = 0; k < kNumStates; ++k) {
    auto a = lift<D>(theta1);
    auto b = lift<D>(theta2);
    (wrt == 0 ? a : b)[k].d = 1.0;
    g[k] = normalized_value(a, b, payoffs, gamma, agent, extra, extra_weight).d;
  }
  return g;
}

// Naive-learner gradient: an agent's own return w.r.t. its own logits.
inline Logits exact_gradient(const Logits& theta1, const Logits& theta2, const PayoffMatrix& payoffs, double gamma,
                             int which) {
  return value_gradient(theta1, theta2, payoffs, gamma, which, which);
}

// Gradient for agent `which` of J_which(theta_self, theta_opp + alpha_opp *
// grad_opp J_opp(theta_self, theta_opp)), differentiating through the
// opponent's naive step.
inline Logits lola_gradient(const Logits& theta1, const Logits& theta2, double alpha_opp, const PayoffMatrix& payoffs,
                            double gamma, int which = 0) {
  check_discount(gamma);
  using D = Dual<double>;
  using DD = Dual<D>;
  const int opp = 1 - which;
  const Logits& self = which == 0 ? theta1 : theta2;
  const Logits& other = which == 0 ? theta2 : theta1;
  Logits g{};
  for (int k = 0; k < kNumStates; ++k) {
    // Opponent's lookahead parameters as functions of self[k] (tangent).
    Probs<D> shifted{};
    for (int m = 0; m < kNumStates; ++m) {
      Probs<DD> mine{}, theirs{};
      for (int s = 0; s < kNumStates; ++s) {
        mine[s] = DD(D(self[s], s == k ? 1.0 : 0.0), D(0.0, 0.0));
        theirs[s] = DD(D(other[s], 0.0), D(s == m ? 1.0 : 0.0, 0.0));
      }
      const DD j_opp = which == 0 ? normalized_value(mine, theirs, payoffs, gamma, opp)
                                  : normalized_value(theirs, mine, payoffs, gamma, opp);
      // j_opp.d = dJ_opp/d other[m] as a dual in self[k]
      shifted[m] = D(other[m] + alpha_opp * j_opp.d.v, alpha_opp * j_opp.d.d);
    }
    Probs<D> mine{};
    for (int s = 0; s < kNumStates; ++s) mine[s] = D(self[s], s == k ? 1.0 : 0.0);
    const D j_self = which == 0 ? normalized_value(mine, shifted, payoffs, gamma, which)
                                : normalized_value(shifted, mine, payoffs, gamma, which);
    g[k] = j_self.d;
  }
  return g;
}

}  // namespace recip::ipd
