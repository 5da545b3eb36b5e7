#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "recip/env/coins.hpp"
#include "recip/influence/model.hpp"
#include "recip/matrix_game.hpp"
#include "recip/nn/adam.hpp"
#include "recip/nn/feedforward.hpp"

namespace recip::influence {

// Joint state features for Coins estimators, from agent 1's side: planes
// (agent 1, agent 2, agent-1 coin, agent-2 coin) and time remaining.
struct CoinsFeaturizer {
  int grid = 3;
  int horizon = 32;
  static constexpr int kActions = env::CoinsEnv::kNumActions;

  int size() const { return 4 * grid * grid + 1; }
  void write(const env::CoinsState& s, Real* out) const {
    const int n = grid * grid;
    std::fill(out, out + size(), Real(0));
    out[s.agent[0]] = 1;
    out[n + s.agent[1]] = 1;
    out[(2 + s.owner) * n + s.coin] = 1;
    out[4 * n] = static_cast<Real>(horizon - s.t) / static_cast<Real>(horizon);
  }
};

// One-hot of the IPD state (start, CC, CD, DC, DD).
struct IpdFeaturizer {
  static constexpr int kActions = 2;
  int size() const { return ipd::kNumStates; }
  void write(std::uint8_t s, Real* out) const {
    std::fill(out, out + size(), Real(0));
    out[s] = 1;
  }
};

// Live and target estimators of influenced agent j's Q-values: the joint
// Q_j(s, a) and the counterfactual Q_{j|i}(s, a_j), whose input omits the
// other agent's action.
struct QEstimatorPair {
  nn::FeedforwardNet<Real> joint, joint_target;
  nn::FeedforwardNet<Real> counterfactual, counterfactual_target;
  nn::AdamState<Real> joint_opt, counterfactual_opt;
};

template <class State, class Featurizer>
class LearnedInfluence final : public InfluenceModel<State> {
 public:
  struct Options {
    std::vector<int> hidden{32, 32};
    double learning_rate = 0.01;
    int epochs = 20;      // minibatch regression steps per refit
    int batch = 1024;     // transitions per step, sampled uniformly
    int period = 1;       // episodes between target copies
  };

  LearnedInfluence(Featurizer featurizer, Options opts, Rng rng)
      : feat_(featurizer), opts_(std::move(opts)), rng_(rng.stream("sampling")) {
    if (opts_.period <= 0 || opts_.epochs < 0 || opts_.batch <= 0) throw ConfigError("LearnedInfluence: bad options");
    Rng init = rng.stream("init");
    for (int j = 0; j < 2; ++j) {
      auto& p = pairs_[j];
      p.joint = nn::FeedforwardNet<Real>(joint_width(), opts_.hidden, {1}, init);
      p.counterfactual = nn::FeedforwardNet<Real>(counterfactual_width(), opts_.hidden, {1}, init);
      p.joint_target = p.joint;
      p.counterfactual_target = p.counterfactual;
      p.joint_opt = nn::AdamState<Real>(p.joint.params().size(), opts_.learning_rate);
      p.counterfactual_opt = nn::AdamState<Real>(p.counterfactual.params().size(), opts_.learning_rate);
    }
  }

  int joint_width() const { return feat_.size() + 2 * Featurizer::kActions; }
  int counterfactual_width() const { return feat_.size() + Featurizer::kActions; }

  // Regresses the live estimators toward discounted returns-to-go, then
  // copies them into the targets at period boundaries. Returns the mean
  // squared error of the last step per estimator (joint_0, cf_0, joint_1, cf_1).
  std::array<double, 4> fit(const InfluenceReplayBuffer<State>& buffer) {
    if (buffer.empty()) throw UsageError("LearnedInfluence::refit before any completed episode");
    for (const auto& e : buffer.episodes())
      if (e.returns.size() != e.steps.size()) throw UsageError("LearnedInfluence: episode returns not filled");
    std::array<double, 4> mse{};
    for (int epoch = 0; epoch < opts_.epochs; ++epoch) {
      const auto batch = buffer.sample(static_cast<std::size_t>(opts_.batch), rng_);
      Mat state(batch.size(), feat_.size());
      std::vector<std::array<int, 2>> actions(batch.size());
      Mat targets(batch.size(), 2);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& tr = batch[b].transition();
        Eigen::Matrix<Real, 1, Eigen::Dynamic> row(feat_.size());
        feat_.write(tr.state, row.data());
        state.row(b) = row;
        actions[b] = tr.actions;
        const auto& ret = batch[b].episode->returns[batch[b].index];
        targets(b, 0) = static_cast<Real>(ret[0]);
        targets(b, 1) = static_cast<Real>(ret[1]);
      }
      for (int j = 0; j < 2; ++j) {
        auto& p = pairs_[j];
        mse[2 * j] = regress(p.joint, p.joint_opt, joint_inputs(state, actions), targets.col(j));
        mse[2 * j + 1] =
            regress(p.counterfactual, p.counterfactual_opt, counterfactual_inputs(state, actions, j), targets.col(j));
      }
    }
    return mse;
  }

  void sync_targets() {
    for (auto& p : pairs_) {
      p.joint_target.params().values() = p.joint.params().values();
      p.counterfactual_target.params().values() = p.counterfactual.params().values();
    }
    fitted_ = true;
  }

  void refit(const InfluenceReplayBuffer<State>& buffer, int episode) override {
    last_mse_ = fit(buffer);
    if (!fitted_ || episode % opts_.period == 0) sync_targets();
  }

  bool fitted() const override { return fitted_; }
  const std::array<double, 4>& last_mse() const { return last_mse_; }
  const QEstimatorPair& pair(int influenced) const { return pairs_[influenced]; }

  // Q_j(s, a) and Q_{j|i}(s, a_j) from the target (or live) estimators.
  double joint_q(int influenced, const State& s, int a1, int a2, bool target = true) const {
    const std::array<std::array<int, 2>, 1> a{{{a1, a2}}};
    const Mat x = joint_inputs(features(s), a);
    const auto& net = target ? pairs_[influenced].joint_target : pairs_[influenced].joint;
    return static_cast<double>(net.evaluate(x)[0](0, 0));
  }
  double counterfactual_q(int influenced, const State& s, int own_action, bool target = true) const {
    std::array<std::array<int, 2>, 1> a{};
    a[0][influenced] = own_action;
    const Mat x = counterfactual_inputs(features(s), a, influenced);
    const auto& net = target ? pairs_[influenced].counterfactual_target : pairs_[influenced].counterfactual;
    return static_cast<double>(net.evaluate(x)[0](0, 0));
  }

  double value_influence(const State& s, int a1, int a2, int influencer, int influenced) const {
    if (!fitted_) throw UsageError("LearnedInfluence: targets have not been fitted");
    if (influencer == influenced) throw UsageError("LearnedInfluence: influencer and influenced must differ");
    return joint_q(influenced, s, a1, a2) - counterfactual_q(influenced, s, influenced == 0 ? a1 : a2);
  }

  InfluenceTrace episode_influence(const EpisodeRecord<State>& ep, int self, int opponent) const override {
    if (!fitted_) throw UsageError("LearnedInfluence: targets have not been fitted");
    const std::size_t n = ep.steps.size();
    Mat state(n, feat_.size());
    std::vector<std::array<int, 2>> actions(n);
    Eigen::Matrix<Real, 1, Eigen::Dynamic> row(feat_.size());
    for (std::size_t i = 0; i < n; ++i) {
      feat_.write(ep.steps[i].state, row.data());
      state.row(i) = row;
      actions[i] = ep.steps[i].actions;
    }
    InfluenceTrace tr;
    tr.lanes = ep.lanes;
    tr.horizon = ep.horizon;
    auto vi = [&](int influenced) {
      const auto& p = pairs_[influenced];
      const Mat q = p.joint_target.evaluate(joint_inputs(state, actions))[0];
      const Mat b = p.counterfactual_target.evaluate(counterfactual_inputs(state, actions, influenced))[0];
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(q(i, 0) - b(i, 0));
      return out;
    };
    tr.opponent_on_self = vi(self);
    tr.self_on_opponent = vi(opponent);
    return tr;
  }

 private:
  Mat features(const State& s) const {
    Mat x(1, feat_.size());
    Eigen::Matrix<Real, 1, Eigen::Dynamic> row(feat_.size());
    feat_.write(s, row.data());
    x.row(0) = row;
    return x;
  }

  Mat joint_inputs(const Mat& state, std::span<const std::array<int, 2>> actions) const {
    const int na = Featurizer::kActions;
    Mat x = Mat::Zero(state.rows(), joint_width());
    x.leftCols(feat_.size()) = state;
    for (Eigen::Index b = 0; b < state.rows(); ++b) {
      x(b, feat_.size() + actions[b][0]) = 1;
      x(b, feat_.size() + na + actions[b][1]) = 1;
    }
    return x;
  }

  // Keeps only the influenced agent's own action.
  Mat counterfactual_inputs(const Mat& state, std::span<const std::array<int, 2>> actions, int influenced) const {
    Mat x = Mat::Zero(state.rows(), counterfactual_width());
    x.leftCols(feat_.size()) = state;
    for (Eigen::Index b = 0; b < state.rows(); ++b) x(b, feat_.size() + actions[b][influenced]) = 1;
    return x;
  }

  static double regress(nn::FeedforwardNet<Real>& net, nn::AdamState<Real>& opt, const Mat& x,
                        const Eigen::Ref<const Mat>& target) {
    const Mat pred = net.forward(x)[0];
    const Mat diff = pred - target;
    const auto n = static_cast<Real>(x.rows());
    const std::vector<Mat> up{(Real(2) / n) * diff};
    auto g = net.backward(up);
    nn::adam_step(net.params().values(), g.params, opt);
    return static_cast<double>(diff.squaredNorm() / n);
  }

  Featurizer feat_;
  Options opts_;
  Rng rng_;
  std::array<QEstimatorPair, 2> pairs_;
  std::array<double, 4> last_mse_{};
  bool fitted_ = false;
};

using CoinsInfluence = LearnedInfluence<env::CoinsState, CoinsFeaturizer>;
using IpdLearnedInfluence = LearnedInfluence<std::uint8_t, IpdFeaturizer>;

}  // namespace recip::influence
