#pragma once

#include <memory>
#include <optional>

#include "recip/agents/actor_critic.hpp"
#include "recip/agents/kind.hpp"
#include "recip/influence/model.hpp"

namespace recip::agents {

// Influence bookkeeping attached to a base learner: its own influence memory
// and estimators, and the balance it keeps against one opponent. Balances
// persist across episodes unless reset_each_episode is set.
template <class State>
class Reciprocator {
 public:
  Reciprocator(std::unique_ptr<influence::InfluenceModel<State>> model, int buffer_episodes, int lanes, double weight,
               int self, int opponent, bool reset_each_episode = false)
      : model_(std::move(model)),
        buffer_(buffer_episodes),
        ledger_(lanes, weight),
        self_(self),
        opponent_(opponent),
        reset_each_episode_(reset_each_episode) {
    if (!model_) throw ConfigError("Reciprocator: influence model required");
    if (self == opponent || self < 0 || self > 1 || opponent < 0 || opponent > 1)
      throw ConfigError("Reciprocator: self and opponent must be distinct agent indices");
  }

  // Stores the finished episode, refits the estimators on schedule and
  // returns the reciprocal reward of every (step, lane), already weighted.
  influence::IntrinsicAnnotation process(influence::EpisodeRecord<State> episode, int index) {
    buffer_.push(std::move(episode));
    model_->refit(buffer_, index);
    if (reset_each_episode_) ledger_.reset();
    return influence::annotate_episode(model_->episode_influence(buffer_.episodes().back(), self_, opponent_), ledger_);
  }

  int self() const { return self_; }
  int opponent() const { return opponent_; }
  double weight() const { return ledger_.weight(); }
  const influence::InfluenceLedger& ledger() const { return ledger_; }
  influence::InfluenceModel<State>& model() { return *model_; }
  const influence::InfluenceReplayBuffer<State>& buffer() const { return buffer_; }

 private:
  std::unique_ptr<influence::InfluenceModel<State>> model_;
  influence::InfluenceReplayBuffer<State> buffer_;
  influence::InfluenceLedger ledger_;
  int self_, opponent_;
  bool reset_each_episode_;
};

// A PPO learner, optionally carrying a Reciprocator.
template <class State>
struct RolloutAgent {
  AgentKind kind = AgentKind::NlPpo;
  ActorCritic policy;
  std::shared_ptr<Reciprocator<State>> reciprocator;
};

template <class State>
RolloutAgent<State> reciprocator_wrap(RolloutAgent<State> base, std::shared_ptr<Reciprocator<State>> rc) {
  if (base.kind != AgentKind::NlPpo) throw ConfigError("reciprocator_wrap: base agent must be NL-PPO");
  base.kind = AgentKind::RcPpo;
  base.reciprocator = std::move(rc);
  return base;
}

}  // namespace recip::agents
