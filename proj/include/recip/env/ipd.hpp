#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recip/env/transition.hpp"
#include "recip/error.hpp"
#include "recip/matrix_game.hpp"
#include "recip/rng.hpp"

namespace recip::env {

// Batched iterated prisoner's dilemma with memory-1 observations. Each agent
// sees a one-hot of the previous joint action from its own side
// (start, CC, CD, DC, DD with its own action first).
class IpdEnv {
 public:
  using State = std::uint8_t;
  static constexpr int kObservationSize = ipd::kNumStates;
  static constexpr int kNumActions = 2;

  IpdEnv(int lanes, int horizon = 32, ipd::PayoffMatrix payoffs = {})
      : lanes_(lanes), horizon_(horizon), payoffs_(payoffs), states_(lanes, ipd::kStart) {
    if (lanes <= 0 || horizon <= 0) throw ConfigError("IpdEnv: lanes and horizon must be positive");
  }

  int lanes() const { return lanes_; }
  int horizon() const { return horizon_; }
  int t() const { return t_; }
  bool done() const { return t_ >= horizon_; }
  const ipd::PayoffMatrix& payoffs() const { return payoffs_; }
  const std::vector<State>& states() const { return states_; }

  std::array<Mat, 2> reset(Rng&) {
    std::fill(states_.begin(), states_.end(), State{ipd::kStart});
    t_ = 0;
    cooperations_ = {0, 0};
    return {observation(0), observation(1)};
  }

  Mat observation(int agent) const {
    Mat obs = Mat::Zero(lanes_, kObservationSize);
    for (int l = 0; l < lanes_; ++l) obs(l, agent == 0 ? states_[l] : ipd::swap_perspective(states_[l])) = 1;
    return obs;
  }

  StepResult<State> step(std::span<const int> a1, std::span<const int> a2, Rng& = dummy_rng()) {
    if (done()) throw UsageError("IpdEnv::step called after the episode finished");
    if (static_cast<int>(a1.size()) != lanes_ || static_cast<int>(a2.size()) != lanes_)
      throw UsageError("IpdEnv::step: one action per lane required");
    StepResult<State> res;
    res.rewards[0].resize(lanes_);
    res.rewards[1].resize(lanes_);
    res.transitions.resize(lanes_);
    for (int l = 0; l < lanes_; ++l) {
      const int x = a1[l], y = a2[l];
      if ((x != ipd::kCooperate && x != ipd::kDefect) || (y != ipd::kCooperate && y != ipd::kDefect))
        throw UsageError("IpdEnv::step: actions must be cooperate (0) or defect (1)");
      auto& tr = res.transitions[l];
      tr.state = states_[l];
      tr.actions = {x, y};
      tr.rewards = {payoffs_.r1[x][y], payoffs_.r2[x][y]};
      tr.step = t_;
      states_[l] = static_cast<State>(ipd::state_after(x, y));
      tr.next = states_[l];
      res.rewards[0][l] = tr.rewards[0];
      res.rewards[1][l] = tr.rewards[1];
      cooperations_[0] += x == ipd::kCooperate;
      cooperations_[1] += y == ipd::kCooperate;
    }
    ++t_;
    res.done = done();
    res.observations = {observation(0), observation(1)};
    return res;
  }

  // Fraction of cooperative actions per agent since reset().
  double cooperation_rate(int agent) const {
    return t_ == 0 ? 0.0 : static_cast<double>(cooperations_[agent]) / (static_cast<double>(t_) * lanes_);
  }

 private:
  static Rng& dummy_rng() {
    static thread_local Rng rng;
    return rng;
  }

  int lanes_;
  int horizon_;
  ipd::PayoffMatrix payoffs_;
  std::vector<State> states_;
  int t_ = 0;
  std::array<long, 2> cooperations_{};
};

}  // namespace recip::env
