#pragma once

#include <cmath>

#include "recip/agents/kind.hpp"
#include "recip/matrix_game.hpp"
#include "recip/rng.hpp"

namespace recip::agents {

// Memory-1 IPD learner that sees the exact game and its opponent's logits.
struct AnalyticAgent {
  AgentKind kind = AgentKind::NlAnalytic;
  ipd::Logits theta{};
  double learning_rate = 1.0;
  double lookahead = 1.0;          // LOLA: assumed opponent step size
  double reciprocal_weight = 5.0;  // RC only

  ipd::Probs<double> probs() const { return ipd::Memory1Policy{theta}.probs(); }
};

inline ipd::Logits random_logits(Rng& rng, double scale = 1.0) {
  ipd::Logits x{};
  for (auto& v : x) v = scale * rng.normal();
  return x;
}

inline ipd::Logits ascend(const ipd::Logits& theta, const ipd::Logits& grad, double lr) {
  ipd::Logits out = theta;
  for (int s = 0; s < ipd::kNumStates; ++s) out[s] += lr * grad[s];
  return out;
}

// One vanilla ascent step on the agent's own exact return.
inline ipd::Logits nl_analytic_update(const ipd::Logits& self, const ipd::Logits& opponent, int self_index, double lr,
                                      const ipd::PayoffMatrix& payoffs, double gamma) {
  const auto& t1 = self_index == 0 ? self : opponent;
  const auto& t2 = self_index == 0 ? opponent : self;
  return ascend(self, ipd::exact_gradient(t1, t2, payoffs, gamma, self_index), lr);
}

inline ipd::Logits lola_analytic_update(const ipd::Logits& self, const ipd::Logits& opponent, int self_index,
                                        double lr, double lookahead, const ipd::PayoffMatrix& payoffs, double gamma) {
  const auto& t1 = self_index == 0 ? self : opponent;
  const auto& t2 = self_index == 0 ? opponent : self;
  return ascend(self, ipd::lola_gradient(t1, t2, lookahead, payoffs, gamma, self_index), lr);
}

// Ascent on the own return plus a per-(state, joint action) bonus, usually
// the mean reciprocal reward observed at each visited pair. The bonus is held
// fixed; its weight is already folded into the table.
inline ipd::Logits rc_analytic_update(const ipd::Logits& self, const ipd::Logits& opponent, int self_index, double lr,
                                      const ipd::PayoffMatrix& payoffs, double gamma,
                                      const ipd::StateJointTable& bonus) {
  const auto& t1 = self_index == 0 ? self : opponent;
  const auto& t2 = self_index == 0 ? opponent : self;
  return ascend(self, ipd::value_gradient(t1, t2, payoffs, gamma, self_index, self_index, &bonus, 1.0), lr);
}

inline bool all_finite(const ipd::Logits& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace recip::agents
