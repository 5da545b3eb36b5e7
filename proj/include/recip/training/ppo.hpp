#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "recip/agents/actor_critic.hpp"
#include "recip/error.hpp"

namespace recip::training {

struct PpoConfig {
  double clip = 0.1;
  int epochs = 10;
  double entropy = 0.02;
  double gamma = 0.96;
  double learning_rate = 0.005;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;

  static PpoConfig ipd() { return {}; }
  static PpoConfig coins() { return {0.15, 40, 0.01, 0.99, 0.005}; }

  void validate() const {
    if (!(clip > 0)) throw ConfigError("ppo: clip must be positive");
    if (epochs < 1) throw ConfigError("ppo: epochs must be at least 1");
    if (!(gamma >= 0 && gamma < 1)) throw ConfigError("ppo: gamma must lie in [0, 1)");
    if (learning_rate < 0 || entropy < 0 || value_coef < 0) throw ConfigError("ppo: coefficients must be non-negative");
  }
};

// One episode of one agent across all lanes; flat arrays are indexed
// t * lanes + lane.
struct TrajectoryBatch {
  int lanes = 0;
  int horizon = 0;
  std::vector<Mat> observations;  // per step, lanes x features
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> extrinsic;
  std::vector<double> intrinsic;
  std::vector<unsigned char> done;

  TrajectoryBatch() = default;
  TrajectoryBatch(int lanes_, int horizon_) : lanes(lanes_), horizon(horizon_) {
    const auto n = static_cast<std::size_t>(lanes) * horizon;
    observations.reserve(horizon);
    actions.reserve(n);
    log_probs.reserve(n);
    values.reserve(n);
    extrinsic.reserve(n);
    intrinsic.assign(n, 0.0);
    done.reserve(n);
  }

  std::size_t size() const { return static_cast<std::size_t>(lanes) * horizon; }
  double reward(std::size_t i) const { return extrinsic[i] + intrinsic[i]; }

  void push_step(const Mat& obs, const agents::ActResult& act, const std::vector<double>& rewards, bool last) {
    observations.push_back(obs);
    actions.insert(actions.end(), act.actions.begin(), act.actions.end());
    log_probs.insert(log_probs.end(), act.log_probs.begin(), act.log_probs.end());
    values.insert(values.end(), act.values.begin(), act.values.end());
    extrinsic.insert(extrinsic.end(), rewards.begin(), rewards.end());
    done.insert(done.end(), static_cast<std::size_t>(lanes), last ? 1 : 0);
  }

  void validate() const {
    const auto n = size();
    if (observations.size() != static_cast<std::size_t>(horizon) || actions.size() != n || log_probs.size() != n ||
        values.size() != n || extrinsic.size() != n || intrinsic.size() != n || done.size() != n)
      throw UsageError("TrajectoryBatch: incomplete episode");
    for (double lp : log_probs)
      if (!std::isfinite(lp)) throw TrainingError("TrajectoryBatch: non-finite log-probability");
  }
};

struct Advantages {
  std::vector<double> returns;     // critic targets
  std::vector<double> advantages;  // normalized when requested
};

// Discounted return-to-go of extrinsic + intrinsic reward minus the stored
// value estimate.
inline Advantages compute_advantages(const TrajectoryBatch& b, double gamma, bool normalize = true) {
  const std::size_t n = b.size();
  if (b.extrinsic.size() != n || b.intrinsic.size() != n || b.values.size() != n || b.done.size() != n)
    throw UsageError("compute_advantages: incomplete batch");
  Advantages out;
  out.returns.assign(n, 0.0);
  out.advantages.assign(n, 0.0);
  for (int l = 0; l < b.lanes; ++l) {
    double acc = 0.0;
    for (int t = b.horizon; t-- > 0;) {
      const std::size_t i = static_cast<std::size_t>(t) * b.lanes + l;
      acc = b.reward(i) + (b.done[i] ? 0.0 : gamma * acc);
      out.returns[i] = acc;
      out.advantages[i] = acc - b.values[i];
    }
  }
  if (normalize && n > 1) {
    double mean = 0.0;
    for (double a : out.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n - 1));
    for (double& a : out.advantages) a = (a - mean) / (sd + 1e-8);
  }
  return out;
}

// Per-sample clipped surrogate min(r A, clip(r, 1-eps, 1+eps) A).
inline double clipped_objective(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

struct PpoStats {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double approx_kl = 0;
  double clip_fraction = 0;
};

struct PpoLoss {
  PpoStats stats;
  double total = 0.0;
  Eigen::MatrixXd d_logits;  // d total / d actor output
  Eigen::MatrixXd d_values;  // d total / d critic output
};

// Loss for one epoch given the current actor logits and critic values:
//   -mean(clipped surrogate) + value_coef * 0.5 * mean((V - R)^2) - entropy * mean(H)
// The gradient takes the unclipped branch whenever it is the active minimum.
template <class LogitsT, class ValuesT>
PpoLoss ppo_loss(const Eigen::MatrixBase<LogitsT>& logits_in, const Eigen::MatrixBase<ValuesT>& values_in,
                 const TrajectoryBatch& batch, const Advantages& adv, const PpoConfig& cfg) {
  const Eigen::MatrixXd logits = logits_in.template cast<double>();
  const Eigen::MatrixXd values = values_in.template cast<double>();
  const std::size_t n = batch.size();
  if (static_cast<std::size_t>(logits.rows()) != n || static_cast<std::size_t>(values.rows()) != n)
    throw UsageError("ppo_loss: network outputs do not match batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd logp = logits;
  for (Eigen::Index r = 0; r < logp.rows(); ++r) {
    const double m = logp.row(r).maxCoeff();
    logp.row(r).array() -= m + std::log((logp.row(r).array() - m).exp().sum());
  }
  const Eigen::MatrixXd p = logp.array().exp();
  PpoLoss out;
  out.d_logits.resize(logits.rows(), logits.cols());
  out.d_values.resize(values.rows(), 1);
  auto& s = out.stats;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const int a = batch.actions[i];
    const double lp = logp(r, a);
    const double ratio = std::exp(lp - batch.log_probs[i]);
    const double A = adv.advantages[i];
    const double unclipped = ratio * A;
    const double obj = clipped_objective(ratio, A, cfg.clip);
    s.policy_loss -= obj * inv_n;
    s.approx_kl += (ratio - 1.0 - (lp - batch.log_probs[i])) * inv_n;
    if (std::abs(ratio - 1.0) > cfg.clip) s.clip_fraction += inv_n;
    const double g_lp = unclipped <= obj ? -A * ratio * inv_n : 0.0;
    double h = 0.0;
    for (Eigen::Index k = 0; k < logp.cols(); ++k) h -= p(r, k) * logp(r, k);
    s.entropy += h * inv_n;
    for (Eigen::Index k = 0; k < logp.cols(); ++k) {
      const double dpg = g_lp * ((k == a ? 1.0 : 0.0) - p(r, k));
      const double dent = cfg.entropy * inv_n * p(r, k) * (logp(r, k) + h);
      out.d_logits(r, k) = dpg + dent;
    }
    const double err = values(r, 0) - adv.returns[i];
    s.value_loss += 0.5 * err * err * inv_n;
    out.d_values(r, 0) = cfg.value_coef * err * inv_n;
  }
  out.total = s.policy_loss + cfg.value_coef * s.value_loss - cfg.entropy * s.entropy;
  return out;
}

// K full-batch epochs on one agent's episode.
inline PpoStats ppo_update(agents::ActorCritic& ac, const TrajectoryBatch& batch, const Advantages& adv,
                           const PpoConfig& cfg) {
  cfg.validate();
  batch.validate();
  const std::size_t n = batch.size();
  if (adv.advantages.size() != n || adv.returns.size() != n) throw UsageError("ppo_update: advantages do not match batch");
  PpoStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Mat logits = ac.actor().forward_episode(batch.observations);
    const Mat values = ac.critic().forward_episode(batch.observations);
    const auto loss = ppo_loss(logits, values, batch, adv, cfg);
    const auto& s = loss.stats;
    if (!std::isfinite(s.policy_loss) || !std::isfinite(s.value_loss) || !std::isfinite(s.entropy)) {
      std::ostringstream msg;
      msg << "ppo_update: non-finite loss at epoch " << epoch << " (policy " << s.policy_loss << ", value "
          << s.value_loss << ", entropy " << s.entropy << ")";
      throw TrainingError(msg.str());
    }
    ac.actor().apply_gradient(loss.d_logits.cast<Real>(), cfg.max_grad_norm);
    ac.critic().apply_gradient(loss.d_values.cast<Real>(), cfg.max_grad_norm);
    stats = s;
  }
  return stats;
}

}  // namespace recip::training
