#pragma once

#include "recip/influence/reciprocity.hpp"
#include "recip/influence/replay_buffer.hpp"

namespace recip::influence {

// Source of one-step value influence estimates for a Reciprocator. Estimates
// come from lagged (target) quantities that change only inside refit().
template <class State>
class InfluenceModel {
 public:
  virtual ~InfluenceModel() = default;

  // Called once per completed episode, after it entered the buffer.
  virtual void refit(const InfluenceReplayBuffer<State>& buffer, int episode) = 0;
  virtual bool fitted() const = 0;

  // VI_{opponent|self} and VI_{self|opponent} at every step of an episode.
  virtual InfluenceTrace episode_influence(const EpisodeRecord<State>& episode, int self, int opponent) const = 0;
};

}  // namespace recip::influence
