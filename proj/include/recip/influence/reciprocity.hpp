#pragma once

#include <cmath>
#include <vector>

#include "recip/error.hpp"

namespace recip::influence {

// Per-step value influence in both directions for one episode, indexed
// t * lanes + lane.
struct InfluenceTrace {
  int lanes = 0;
  int horizon = 0;
  std::vector<double> opponent_on_self;  // VI_{i|rc}
  std::vector<double> self_on_opponent;  // VI_{rc|i}
};

// Running influence balance B_{rc|i} per batch lane.
class InfluenceLedger {
 public:
  InfluenceLedger(int lanes, double weight) : balance_(lanes, 0.0), weight_(weight) {
    if (lanes <= 0) throw ConfigError("InfluenceLedger: lanes must be positive");
  }

  int lanes() const { return static_cast<int>(balance_.size()); }
  double weight() const { return weight_; }
  double balance(int lane) const { return balance_[lane]; }
  const std::vector<double>& balances() const { return balance_; }
  void set_balance(int lane, double b) { balance_[lane] = b; }
  void reset() { std::fill(balance_.begin(), balance_.end(), 0.0); }

  double mean_abs_balance() const {
    double s = 0.0;
    for (double b : balance_) s += std::abs(b);
    return s / static_cast<double>(balance_.size());
  }

  // B(t) = B(t-1) + VI_{i|rc} - VI_{rc|i}; returns the new balance.
  double update_balance(int lane, double vi_opponent_on_self, double vi_self_on_opponent) {
    balance_[lane] += vi_opponent_on_self - vi_self_on_opponent;
    return balance_[lane];
  }

 private:
  std::vector<double> balance_;
  double weight_;
};

// r^R = w * B(t-1) * VI_{rc|i}.
inline double reciprocal_reward(double weight, double balance_before, double vi_self_on_opponent) {
  return weight * balance_before * vi_self_on_opponent;
}

struct IntrinsicAnnotation {
  std::vector<double> rewards;  // t * lanes + lane, already weighted
  double total = 0.0;           // summed over steps and lanes
  double mean_per_step = 0.0;
  double mean_abs_balance = 0.0;  // after the episode
  double mean_vi_opponent_on_self = 0.0;
  double mean_vi_self_on_opponent = 0.0;
};

// Walks the episode in time order: the reward at t uses the balance from
// t - 1, then the balance absorbs step t's influences.
inline IntrinsicAnnotation annotate_episode(const InfluenceTrace& trace, InfluenceLedger& ledger) {
  if (trace.lanes != ledger.lanes()) throw UsageError("annotate_episode: lane count differs from ledger");
  const std::size_t n = static_cast<std::size_t>(trace.lanes) * trace.horizon;
  if (trace.opponent_on_self.size() != n || trace.self_on_opponent.size() != n)
    throw UsageError("annotate_episode: influence trace is incomplete");
  IntrinsicAnnotation out;
  out.rewards.assign(n, 0.0);
  for (int t = 0; t < trace.horizon; ++t) {
    for (int l = 0; l < trace.lanes; ++l) {
      const std::size_t i = static_cast<std::size_t>(t) * trace.lanes + l;
      const double r = reciprocal_reward(ledger.weight(), ledger.balance(l), trace.self_on_opponent[i]);
      ledger.update_balance(l, trace.opponent_on_self[i], trace.self_on_opponent[i]);
      out.rewards[i] = r;
      out.total += r;
      out.mean_vi_opponent_on_self += trace.opponent_on_self[i];
      out.mean_vi_self_on_opponent += trace.self_on_opponent[i];
    }
  }
  const double denom = n == 0 ? 1.0 : static_cast<double>(n);
  out.mean_per_step = out.total / denom;
  out.mean_vi_opponent_on_self /= denom;
  out.mean_vi_self_on_opponent /= denom;
  out.mean_abs_balance = ledger.mean_abs_balance();
  return out;
}

}  // namespace recip::influence
