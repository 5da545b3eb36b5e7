#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>

#include "recip/agents/analytic.hpp"
#include "recip/agents/reciprocator.hpp"
#include "recip/env/coins.hpp"
#include "recip/env/ipd.hpp"
#include "recip/harness/metrics.hpp"
#include "recip/influence/analytic.hpp"
#include "recip/training/ppo.hpp"

namespace recip::training {

using MetricsCallback = std::function<void(const harness::MetricsRow&)>;

// Simultaneous PPO learning in a stepping environment. Each call to
// next_episode() runs one full episode of every lane, then post-processes
// it: influence memory append, estimator refit, reciprocal rewards,
// advantages and K PPO epochs for both agents. Policy memory is discarded
// afterwards; influence memory and balances persist.
template <class Env>
class RolloutTrainer {
 public:
  using State = typename Env::State;

  RolloutTrainer(Env env, std::array<agents::RolloutAgent<State>, 2> agents, PpoConfig ppo, Rng rng)
      : env_(std::move(env)),
        agents_(std::move(agents)),
        ppo_(ppo),
        env_rng_(rng.stream("env")),
        act_rng_{rng.stream("act", 0), rng.stream("act", 1)} {
    ppo_.validate();
    for (int k = 0; k < 2; ++k) {
      const auto& a = agents_[k];
      if (agents::is_analytic(a.kind)) throw ConfigError("RolloutTrainer: analytic agents need the analytic trainer");
      if ((a.kind == agents::AgentKind::RcPpo) != static_cast<bool>(a.reciprocator))
        throw ConfigError("RolloutTrainer: RC-PPO agents need a Reciprocator and NL-PPO agents must not have one");
      if (a.reciprocator && (a.reciprocator->self() != k || a.reciprocator->ledger().lanes() != env_.lanes()))
        throw ConfigError("RolloutTrainer: Reciprocator index or lane count does not match its seat");
    }
  }

  int episode() const { return episode_; }
  const Env& env() const { return env_; }
  std::array<agents::RolloutAgent<State>, 2>& agents() { return agents_; }
  const std::array<PpoStats, 2>& last_stats() const { return stats_; }

  harness::MetricsRow next_episode() {
    const int lanes = env_.lanes();
    const int horizon = env_.horizon();
    std::array<TrajectoryBatch, 2> batch{TrajectoryBatch(lanes, horizon), TrajectoryBatch(lanes, horizon)};
    influence::EpisodeRecord<State> record;
    record.index = episode_;
    record.lanes = lanes;
    record.horizon = horizon;
    record.steps.reserve(static_cast<std::size_t>(lanes) * horizon);

    auto obs = env_.reset(env_rng_);
    std::array<agents::HiddenState, 2> hidden{agents_[0].policy.initial_hidden(lanes),
                                              agents_[1].policy.initial_hidden(lanes)};
    for (int t = 0; t < horizon; ++t) {
      std::array<agents::ActResult, 2> act;
      for (int k = 0; k < 2; ++k) act[k] = agents_[k].policy.act(obs[k], hidden[k], act_rng_[k]);
      auto res = env_.step(act[0].actions, act[1].actions, env_rng_);
      for (auto& tr : res.transitions) {
        tr.episode = episode_;
        record.steps.push_back(tr);
      }
      for (int k = 0; k < 2; ++k) batch[k].push_step(obs[k], act[k], res.rewards[k], res.done);
      obs = std::move(res.observations);
    }
    record.fill_returns(ppo_.gamma);

    harness::MetricsRow row;
    row.episode = episode_;
    environment_metrics(row);
    for (int k = 0; k < 2; ++k) row.ext_return[k] = per_lane_sum(batch[k].extrinsic);

    for (int k = 0; k < 2; ++k) {
      auto& rc = agents_[k].reciprocator;
      if (!rc) continue;
      auto note = rc->process(record, episode_);
      batch[k].intrinsic = std::move(note.rewards);
      row.int_return[k] = per_lane_sum(batch[k].intrinsic);
      row.mean_abs_balance[k] = note.mean_abs_balance;
    }
    for (int k = 0; k < 2; ++k) {
      const auto adv = compute_advantages(batch[k], ppo_.gamma, ppo_.normalize_advantages);
      stats_[k] = ppo_update(agents_[k].policy, batch[k], adv, ppo_);
    }
    ++episode_;
    return row;
  }

 private:
  double per_lane_sum(const std::vector<double>& xs) const {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / env_.lanes();
  }

  void environment_metrics(harness::MetricsRow& row) const {
    if constexpr (std::is_same_v<Env, env::IpdEnv>) {
      for (int k = 0; k < 2; ++k) row.coop_rate[k] = env_.cooperation_rate(k);
    } else if constexpr (std::is_same_v<Env, env::CoinsEnv>) {
      for (int k = 0; k < 2; ++k) {
        const double own = static_cast<double>(env_.own_coins(k));
        const double total = own + static_cast<double>(env_.other_coins(k));
        row.own_coin_frac[k] = total > 0 ? own / total : 0.0;
        row.coins[k] = total / env_.lanes();
      }
    }
  }

  Env env_;
  std::array<agents::RolloutAgent<State>, 2> agents_;
  PpoConfig ppo_;
  Rng env_rng_;
  std::array<Rng, 2> act_rng_;
  std::array<PpoStats, 2> stats_{};
  int episode_ = 0;
};

template <class Env>
void train_match(RolloutTrainer<Env>& trainer, int episodes, const MetricsCallback& on_row) {
  for (int e = 0; e < episodes; ++e) {
    auto row = trainer.next_episode();
    if (!row.finite()) throw TrainingError("train_match: non-finite metrics at episode " + std::to_string(row.episode));
    if (on_row) on_row(row);
  }
}

struct AnalyticOptions {
  ipd::PayoffMatrix payoffs{};
  double gamma = 0.96;
  int lanes = 1024;         // sampled trajectories per episode for reciprocal rewards
  int horizon = 32;
  int buffer_episodes = 5;
  int target_period = 10;
  double q_scale = 2.0;
  bool reset_balance = true;
};

// Exact-gradient IPD learners. Reciprocators sample a batch of trajectories
// from the current policies each episode, assign reciprocal rewards from
// exact influence under policies estimated from their influence memory, and
// add the mean reward of each visited (state, joint action) pair to the
// differentiable return.
class AnalyticTrainer {
 public:
  AnalyticTrainer(std::array<agents::AnalyticAgent, 2> agents, AnalyticOptions opts, Rng rng)
      : agents_(agents), opts_(opts), rng_(rng.stream("rollout")) {
    ipd::check_discount(opts_.gamma);
    if (opts_.lanes <= 0 || opts_.horizon <= 0) throw ConfigError("AnalyticTrainer: lanes and horizon must be positive");
    for (int k = 0; k < 2; ++k) {
      if (!agents::is_analytic(agents_[k].kind)) throw ConfigError("AnalyticTrainer: rollout agents need RolloutTrainer");
      if (agents_[k].kind != agents::AgentKind::RcAnalytic) continue;
      influence::AnalyticInfluence::Options io{opts_.payoffs, opts_.gamma, opts_.target_period, opts_.q_scale};
      reciprocators_[k] = std::make_unique<agents::Reciprocator<std::uint8_t>>(
          std::make_unique<influence::AnalyticInfluence>(io), opts_.buffer_episodes, opts_.lanes,
          agents_[k].reciprocal_weight, k, 1 - k, opts_.reset_balance);
    }
  }

  int episode() const { return episode_; }
  const std::array<agents::AnalyticAgent, 2>& agents() const { return agents_; }
  const ipd::StateJointTable& last_bonus(int k) const { return bonus_[k]; }

  harness::MetricsRow next_episode() {
    const auto p1 = agents_[0].probs(), p2 = agents_[1].probs();
    const auto sol = ipd::exact_return(p1, p2, opts_.payoffs, opts_.gamma);
    harness::MetricsRow row;
    row.episode = episode_;
    row.ext_return = {sol.v1, sol.v2};
    double mass = 0.0;
    for (int s = 0; s < ipd::kNumStates; ++s) mass += sol.occupancy[s];
    for (int s = 0; s < ipd::kNumStates; ++s) {
      row.coop_rate[0] += sol.occupancy[s] * p1[s] / mass;
      row.coop_rate[1] += sol.occupancy[s] * p2[ipd::swap_perspective(s)] / mass;
    }

    if (reciprocators_[0] || reciprocators_[1]) {
      const auto record = sample(p1, p2);
      for (int k = 0; k < 2; ++k) {
        if (!reciprocators_[k]) continue;
        const auto note = reciprocators_[k]->process(record, episode_);
        bonus_[k] = mean_by_pair(record, note.rewards);
        row.int_return[k] = note.mean_per_step;
        row.mean_abs_balance[k] = note.mean_abs_balance;
      }
    }

    std::array<ipd::Logits, 2> next;
    for (int k = 0; k < 2; ++k) {
      const auto& a = agents_[k];
      const auto& opp = agents_[1 - k].theta;
      switch (a.kind) {
        case agents::AgentKind::NlAnalytic:
          next[k] = agents::nl_analytic_update(a.theta, opp, k, a.learning_rate, opts_.payoffs, opts_.gamma);
          break;
        case agents::AgentKind::LolaAnalytic:
          next[k] = agents::lola_analytic_update(a.theta, opp, k, a.learning_rate, a.lookahead, opts_.payoffs,
                                                 opts_.gamma);
          break;
        default:
          next[k] = agents::rc_analytic_update(a.theta, opp, k, a.learning_rate, opts_.payoffs, opts_.gamma, bonus_[k]);
      }
      if (!agents::all_finite(next[k])) throw TrainingError("AnalyticTrainer: non-finite parameters");
    }
    for (int k = 0; k < 2; ++k) agents_[k].theta = next[k];
    ++episode_;
    return row;
  }

 private:
  influence::EpisodeRecord<std::uint8_t> sample(const ipd::Probs<double>& p1, const ipd::Probs<double>& p2) {
    influence::EpisodeRecord<std::uint8_t> ep;
    ep.index = episode_;
    ep.lanes = opts_.lanes;
    ep.horizon = opts_.horizon;
    ep.steps.resize(static_cast<std::size_t>(opts_.lanes) * opts_.horizon);
    std::vector<std::uint8_t> state(opts_.lanes, ipd::kStart);
    for (int t = 0; t < opts_.horizon; ++t)
      for (int l = 0; l < opts_.lanes; ++l) {
        auto& tr = ep.steps[static_cast<std::size_t>(t) * opts_.lanes + l];
        const int s = state[l];
        const int a1 = rng_.bernoulli(p1[s]) ? ipd::kCooperate : ipd::kDefect;
        const int a2 = rng_.bernoulli(p2[ipd::swap_perspective(s)]) ? ipd::kCooperate : ipd::kDefect;
        tr.state = static_cast<std::uint8_t>(s);
        tr.actions = {a1, a2};
        tr.rewards = {opts_.payoffs.r1[a1][a2], opts_.payoffs.r2[a1][a2]};
        tr.episode = episode_;
        tr.step = t;
        state[l] = static_cast<std::uint8_t>(ipd::state_after(a1, a2));
        tr.next = state[l];
      }
    return ep;
  }

  static ipd::StateJointTable mean_by_pair(const influence::EpisodeRecord<std::uint8_t>& ep,
                                           const std::vector<double>& rewards) {
    ipd::StateJointTable sum{}, count{};
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      const auto& tr = ep.steps[i];
      const int j = ipd::joint_index(tr.actions[0], tr.actions[1]);
      sum[tr.state][j] += rewards[i];
      count[tr.state][j] += 1.0;
    }
    for (int s = 0; s < ipd::kNumStates; ++s)
      for (int j = 0; j < ipd::kNumJoint; ++j) sum[s][j] = count[s][j] > 0 ? sum[s][j] / count[s][j] : 0.0;
    return sum;
  }

  std::array<agents::AnalyticAgent, 2> agents_;
  AnalyticOptions opts_;
  Rng rng_;
  std::array<std::unique_ptr<agents::Reciprocator<std::uint8_t>>, 2> reciprocators_;
  std::array<ipd::StateJointTable, 2> bonus_{};
  int episode_ = 0;
};

inline void train_match(AnalyticTrainer& trainer, int episodes, const MetricsCallback& on_row) {
  for (int e = 0; e < episodes; ++e) {
    auto row = trainer.next_episode();
    if (!row.finite()) throw TrainingError("train_match: non-finite metrics at episode " + std::to_string(row.episode));
    if (on_row) on_row(row);
  }
}

}  // namespace recip::training
