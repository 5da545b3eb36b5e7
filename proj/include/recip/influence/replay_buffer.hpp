#pragma once

#include <array>
#include <deque>
#include <vector>

#include "recip/env/transition.hpp"
#include "recip/error.hpp"
#include "recip/rng.hpp"

namespace recip::influence {

// All lanes of one completed episode; transition (t, lane) lives at
// t * lanes + lane.
template <class State>
struct EpisodeRecord {
  int index = 0;
  int lanes = 0;
  int horizon = 0;
  std::vector<env::JointTransition<State>> steps;
  // Discounted extrinsic return-to-go per transition and agent; filled by
  // fill_returns().
  std::vector<std::array<double, 2>> returns;

  const env::JointTransition<State>& at(int t, int lane) const { return steps[static_cast<std::size_t>(t) * lanes + lane]; }

  void fill_returns(double gamma) {
    returns.assign(steps.size(), {0.0, 0.0});
    for (int l = 0; l < lanes; ++l) {
      std::array<double, 2> acc{0.0, 0.0};
      for (int t = horizon; t-- > 0;) {
        const std::size_t i = static_cast<std::size_t>(t) * lanes + l;
        for (int k = 0; k < 2; ++k) acc[k] = steps[i].rewards[k] + gamma * acc[k];
        returns[i] = acc;
      }
    }
  }
};

// Ring buffer of whole episodes; the oldest episode is evicted first.
template <class State>
class InfluenceReplayBuffer {
 public:
  explicit InfluenceReplayBuffer(int capacity_episodes) : capacity_(capacity_episodes) {
    if (capacity_episodes <= 0) throw ConfigError("InfluenceReplayBuffer: capacity must be positive");
  }

  void push(EpisodeRecord<State> episode) {
    if (episode.steps.size() != static_cast<std::size_t>(episode.lanes) * episode.horizon)
      throw UsageError("InfluenceReplayBuffer::push: episode is incomplete");
    if (static_cast<int>(episodes_.size()) == capacity_) episodes_.pop_front();
    episodes_.push_back(std::move(episode));
  }

  int capacity() const { return capacity_; }
  bool empty() const { return episodes_.empty(); }
  const std::deque<EpisodeRecord<State>>& episodes() const { return episodes_; }

  std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& e : episodes_) n += e.steps.size();
    return n;
  }

  struct Ref {
    const EpisodeRecord<State>* episode;
    std::size_t index;
    const env::JointTransition<State>& transition() const { return episode->steps[index]; }
  };

  // Uniform sample (with replacement) over all stored transitions.
  std::vector<Ref> sample(std::size_t n, Rng& rng) const {
    if (empty()) throw UsageError("InfluenceReplayBuffer::sample on an empty buffer");
    const std::size_t total = transition_count();
    std::vector<Ref> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(total));
      if (pick >= total) pick = total - 1;
      for (const auto& e : episodes_) {
        if (pick < e.steps.size()) {
          out.push_back({&e, pick});
          break;
        }
        pick -= e.steps.size();
      }
    }
    return out;
  }

 private:
  int capacity_;
  std::deque<EpisodeRecord<State>> episodes_;
};

}  // namespace recip::influence
