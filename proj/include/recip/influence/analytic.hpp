#pragma once

#include <array>
#include <cstdint>

#include "recip/influence/model.hpp"
#include "recip/matrix_game.hpp"

namespace recip::influence {

using ipd::Probs;

// Probability that `agent` plays `action` in agent-1-indexed state s.
inline double action_prob(const Probs<double>& own_view, int agent, int state, int action) {
  const double c = own_view[agent == 0 ? state : ipd::swap_perspective(state)];
  return action == ipd::kCooperate ? c : 1.0 - c;
}

// VI_{influencer|influenced}(s, a) = Q_j(s, a) - sum_x pi_i(x|s) Q_j(s, a with
// a_i := x), from exact Q-values.
inline double analytic_vi(const ipd::QTable& q, const Probs<double>& p1, const Probs<double>& p2, int state, int a1,
                          int a2, int influencer, int influenced) {
  const Probs<double>& pi = influencer == 0 ? p1 : p2;
  double baseline = 0.0;
  for (int x = 0; x < 2; ++x) {
    const int b1 = influencer == 0 ? x : a1;
    const int b2 = influencer == 0 ? a2 : x;
    baseline += action_prob(pi, influencer, state, x) * q.at(influenced, b1, b2);
  }
  return q.at(influenced, a1, a2) - baseline;
}

inline double analytic_vi(const Probs<double>& p1, const Probs<double>& p2, const ipd::PayoffMatrix& payoffs,
                          double gamma, int state, int a1, int a2, int influencer, int influenced) {
  return analytic_vi(ipd::exact_q_table(p1, p2, payoffs, gamma), p1, p2, state, a1, a2, influencer, influenced);
}

// COMA advantage A_i(s, a) = Q_i(s, a) - sum_x pi_i(x|s) Q_i(s, (a_-i, x)),
// evaluated through exact_q one joint action at a time.
inline double coma_advantage(const Probs<double>& p1, const Probs<double>& p2, const ipd::PayoffMatrix& payoffs,
                             double gamma, int state, int a1, int a2, int agent) {
  auto q_of = [&](int x1, int x2) {
    const auto q = ipd::exact_q(p1, p2, payoffs, gamma, state, x1, x2);
    return agent == 0 ? q.q1 : q.q2;
  };
  double expected = 0.0;
  for (int x = 0; x < 2; ++x) {
    const double p = action_prob(agent == 0 ? p1 : p2, agent, state, x);
    expected += p * (agent == 0 ? q_of(x, a2) : q_of(a1, x));
  }
  return q_of(a1, a2) - expected;
}

struct PolicyEstimate {
  std::array<Probs<double>, 2> probs{};  // own-perspective cooperation frequencies
  std::array<std::array<long, ipd::kNumStates>, 2> visits{};
};

// Empirical per-state cooperation frequency of each agent over the buffer;
// states never visited fall back to `prior`.
inline PolicyEstimate estimate_policies(const InfluenceReplayBuffer<std::uint8_t>& buffer, double prior = 0.5) {
  PolicyEstimate est;
  std::array<std::array<long, ipd::kNumStates>, 2> coop{};
  for (const auto& ep : buffer.episodes())
    for (const auto& tr : ep.steps)
      for (int k = 0; k < 2; ++k) {
        const int own = k == 0 ? tr.state : ipd::swap_perspective(tr.state);
        ++est.visits[k][own];
        coop[k][own] += tr.actions[k] == ipd::kCooperate;
      }
  for (int k = 0; k < 2; ++k)
    for (int s = 0; s < ipd::kNumStates; ++s)
      est.probs[k][s] = est.visits[k][s] == 0 ? prior
                                              : static_cast<double>(coop[k][s]) / static_cast<double>(est.visits[k][s]);
  return est;
}

// Influence in the IPD from exact Q-values under policies estimated from the
// replay buffer, refreshed every `period` episodes.
class AnalyticInfluence final : public InfluenceModel<std::uint8_t> {
 public:
  struct Options {
    ipd::PayoffMatrix payoffs{};
    double gamma = 0.96;
    int period = 10;
    // Multiplies Q-values; (1 - gamma) puts VI on the per-step reward scale.
    double q_scale = 1.0;
  };

  explicit AnalyticInfluence(Options opts) : opts_(opts) {
    ipd::check_discount(opts_.gamma);
    if (opts_.period <= 0) throw ConfigError("AnalyticInfluence: update period must be positive");
  }

  void refit(const InfluenceReplayBuffer<std::uint8_t>& buffer, int episode) override {
    if (buffer.empty()) throw UsageError("AnalyticInfluence::refit before any completed episode");
    if (fitted_ && episode % opts_.period != 0) return;
    set_policies(estimate_policies(buffer).probs);
  }

  void set_policies(const std::array<Probs<double>, 2>& probs) {
    probs_ = probs;
    q_ = ipd::exact_q_table(probs_[0], probs_[1], opts_.payoffs, opts_.gamma);
    for (auto& row : q_.q)
      for (auto& x : row) x *= opts_.q_scale;
    fitted_ = true;
  }

  bool fitted() const override { return fitted_; }
  const std::array<Probs<double>, 2>& policies() const { return probs_; }

  double value_influence(int state, int a1, int a2, int influencer, int influenced) const {
    if (!fitted_) throw UsageError("AnalyticInfluence: targets have not been fitted");
    return analytic_vi(q_, probs_[0], probs_[1], state, a1, a2, influencer, influenced);
  }

  InfluenceTrace episode_influence(const EpisodeRecord<std::uint8_t>& ep, int self, int opponent) const override {
    InfluenceTrace tr;
    tr.lanes = ep.lanes;
    tr.horizon = ep.horizon;
    tr.opponent_on_self.resize(ep.steps.size());
    tr.self_on_opponent.resize(ep.steps.size());
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      const auto& s = ep.steps[i];
      tr.opponent_on_self[i] = value_influence(s.state, s.actions[0], s.actions[1], opponent, self);
      tr.self_on_opponent[i] = value_influence(s.state, s.actions[0], s.actions[1], self, opponent);
    }
    return tr;
  }

 private:
  Options opts_;
  std::array<Probs<double>, 2> probs_{};
  ipd::QTable q_{};
  bool fitted_ = false;
};

}  // namespace recip::influence
