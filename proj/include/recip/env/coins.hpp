#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "recip/env/transition.hpp"
#include "recip/error.hpp"
#include "recip/rng.hpp"

namespace recip::env {

struct CoinsState {
  std::array<std::uint8_t, 2> agent{};  // cell index row * grid + col
  std::uint8_t coin = 0;
  std::uint8_t owner = 0;  // agent whose color the coin has
  std::uint8_t t = 0;

  bool operator==(const CoinsState&) const = default;
};

enum CoinsAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

// Two-player Coins on a torus. Collecting any coin pays +1; when the coin is
// collected by an agent of the other color its owner pays -2 (once, even if
// both agents step onto it together). One coin exists at all times and
// respawns, with a uniform color, in a cell neither agent occupies.
class CoinsEnv {
 public:
  using State = CoinsState;
  static constexpr int kNumActions = 4;

  CoinsEnv(int lanes, int grid = 3, int horizon = 32) : lanes_(lanes), grid_(grid), horizon_(horizon), states_(lanes) {
    if (lanes <= 0 || horizon <= 0 || horizon > 255) throw ConfigError("CoinsEnv: bad lanes or horizon");
    if (grid < 2 || grid > 15) throw ConfigError("CoinsEnv: grid size must be in [2, 15]");
  }

  int lanes() const { return lanes_; }
  int grid() const { return grid_; }
  int cells() const { return grid_ * grid_; }
  int horizon() const { return horizon_; }
  int t() const { return t_; }
  bool done() const { return t_ >= horizon_; }
  int observation_size() const { return 4 * cells() + 1; }
  const std::vector<State>& states() const { return states_; }

  // Overrides one lane's state (scenario construction in tests and tools).
  void set_state(int lane, const State& s) {
    if (s.agent[0] >= cells() || s.agent[1] >= cells() || s.coin >= cells() || s.owner > 1)
      throw ConfigError("CoinsEnv::set_state: position outside the grid");
    states_.at(lane) = s;
    t_ = s.t;
  }

  std::array<Mat, 2> reset(Rng& rng) {
    const int n = cells();
    for (auto& s : states_) {
      s.agent[0] = static_cast<std::uint8_t>(rng.below(n));
      int b = rng.below(n - 1);
      if (b >= s.agent[0]) ++b;
      s.agent[1] = static_cast<std::uint8_t>(b);
      s.coin = static_cast<std::uint8_t>(free_cell(s, rng));
      s.owner = static_cast<std::uint8_t>(rng.below(2));
      s.t = 0;
    }
    t_ = 0;
    own_ = {0, 0};
    other_ = {0, 0};
    return {observation(0), observation(1)};
  }

  // Planes (self, other agent, own-color coin, other-color coin) followed by
  // the normalized time remaining (T - t) / T.
  Mat observation(int agent) const {
    const int n = cells();
    Mat obs = Mat::Zero(lanes_, observation_size());
    for (int l = 0; l < lanes_; ++l) {
      const auto& s = states_[l];
      obs(l, s.agent[agent]) = 1;
      obs(l, n + s.agent[1 - agent]) = 1;
      obs(l, (s.owner == agent ? 2 : 3) * n + s.coin) = 1;
      obs(l, 4 * n) = time_remaining(s.t);
    }
    return obs;
  }

  Real time_remaining(int t) const { return static_cast<Real>(horizon_ - t) / static_cast<Real>(horizon_); }

  int move(int cell, int action) const {
    int r = cell / grid_, c = cell % grid_;
    switch (action) {
      case kUp: r = (r + grid_ - 1) % grid_; break;
      case kDown: r = (r + 1) % grid_; break;
      case kLeft: c = (c + grid_ - 1) % grid_; break;
      case kRight: c = (c + 1) % grid_; break;
      default: throw UsageError("CoinsEnv: action must be in [0, 4)");
    }
    return r * grid_ + c;
  }

  StepResult<State> step(std::span<const int> a1, std::span<const int> a2, Rng& rng) {
    if (done()) throw UsageError("CoinsEnv::step called after the episode finished");
    if (static_cast<int>(a1.size()) != lanes_ || static_cast<int>(a2.size()) != lanes_)
      throw UsageError("CoinsEnv::step: one action per lane required");
    StepResult<State> res;
    res.rewards[0].assign(lanes_, 0.0);
    res.rewards[1].assign(lanes_, 0.0);
    res.transitions.resize(lanes_);
    for (int l = 0; l < lanes_; ++l) {
      auto& s = states_[l];
      auto& tr = res.transitions[l];
      tr.state = s;
      tr.actions = {a1[l], a2[l]};
      tr.step = t_;
      s.agent[0] = static_cast<std::uint8_t>(move(s.agent[0], a1[l]));
      s.agent[1] = static_cast<std::uint8_t>(move(s.agent[1], a2[l]));
      bool collected = false;
      bool stolen = false;
      for (int k = 0; k < 2; ++k) {
        if (s.agent[k] != s.coin) continue;
        collected = true;
        tr.rewards[k] += 1.0;
        if (k == s.owner) {
          ++own_[k];
        } else {
          ++other_[k];
          stolen = true;
        }
      }
      if (stolen) tr.rewards[s.owner] -= 2.0;
      if (collected) {
        s.coin = static_cast<std::uint8_t>(free_cell(s, rng));
        s.owner = static_cast<std::uint8_t>(rng.below(2));
      }
      s.t = static_cast<std::uint8_t>(t_ + 1);
      tr.next = s;
      res.rewards[0][l] = tr.rewards[0];
      res.rewards[1][l] = tr.rewards[1];
    }
    ++t_;
    res.done = done();
    res.observations = {observation(0), observation(1)};
    return res;
  }

  // Coins of its own color / the other color collected by `agent` since reset().
  long own_coins(int agent) const { return own_[agent]; }
  long other_coins(int agent) const { return other_[agent]; }

 private:
  int free_cell(const State& s, Rng& rng) const {
    const int n = cells();
    const int lo = std::min(s.agent[0], s.agent[1]);
    const int hi = std::max(s.agent[0], s.agent[1]);
    const int blocked = lo == hi ? 1 : 2;
    int c = rng.below(n - blocked);
    if (c >= lo) ++c;
    if (blocked == 2 && c >= hi) ++c;
    return c;
  }

  int lanes_;
  int grid_;
  int horizon_;
  std::vector<State> states_;
  int t_ = 0;
  std::array<long, 2> own_{};
  std::array<long, 2> other_{};
};

}  // namespace recip::env
