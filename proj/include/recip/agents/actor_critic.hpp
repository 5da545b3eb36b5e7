#pragma once

#include <cmath>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "recip/error.hpp"
#include "recip/nn/adam.hpp"
#include "recip/nn/checkpoint.hpp"
#include "recip/nn/feedforward.hpp"
#include "recip/nn/recurrent.hpp"
#include "recip/real.hpp"
#include "recip/rng.hpp"

namespace recip::agents {

struct NetworkShape {
  int observation_size = 0;
  int actions = 2;
  std::vector<int> hidden{2, 2};
  int recurrent = 0;  // GRU width; 0 for none
};

// Optional GRU followed by a tanh MLP with a single linear head. Owns its
// optimizer state.
class Tower {
 public:
  Tower() = default;
  Tower(const NetworkShape& shape, int outputs, double head_gain, double learning_rate, Rng& rng) {
    int width = shape.observation_size;
    if (shape.recurrent > 0) {
      gru_.emplace(width, shape.recurrent, rng);
      gru_opt_ = nn::AdamState<Real>(gru_->params().size(), learning_rate);
      width = shape.recurrent;
    }
    mlp_ = nn::FeedforwardNet<Real>(width, shape.hidden, {outputs}, rng, {head_gain});
    mlp_opt_ = nn::AdamState<Real>(mlp_.params().size(), learning_rate);
  }

  bool recurrent() const { return gru_.has_value(); }
  int hidden_size() const { return gru_ ? gru_->hidden_size() : 0; }
  Mat initial_hidden(Eigen::Index lanes) const { return Mat::Zero(lanes, hidden_size()); }

  // One step for all lanes; h is advanced in place when recurrent.
  Mat step(const Mat& obs, Mat& h) const {
    if (!gru_) return mlp_.evaluate(obs)[0];
    h = gru_->step(obs, h);
    return mlp_.evaluate(h)[0];
  }

  // Whole episode from a zero hidden state, recorded for apply_gradient().
  // Rows are ordered t * lanes + lane.
  Mat forward_episode(std::span<const Mat> obs) {
    if (obs.empty()) throw UsageError("Tower::forward_episode: empty episode");
    const Eigen::Index lanes = obs.front().rows();
    const auto steps = static_cast<Eigen::Index>(obs.size());
    lanes_ = lanes;
    if (gru_) {
      const auto hs = gru_->forward_sequence(obs, initial_hidden(lanes));
      return mlp_.forward(stack(hs))[0];
    }
    Mat x(steps * lanes, obs.front().cols());
    for (Eigen::Index t = 0; t < steps; ++t) x.middleRows(t * lanes, lanes) = obs[t];
    return mlp_.forward(x)[0];
  }

  // Backpropagates d loss / d output, clips the joint gradient norm of this
  // tower and takes one Adam step. Returns the pre-clip norm.
  double apply_gradient(const Mat& d_out, double max_norm) {
    const std::vector<Mat> up{d_out};
    auto g = mlp_.backward(up);
    std::optional<nn::SequenceGradients<Real>> gg;
    if (gru_) {
      const Eigen::Index steps = g.input.rows() / lanes_;
      std::vector<Mat> dh(static_cast<std::size_t>(steps));
      for (Eigen::Index t = 0; t < steps; ++t) dh[t] = g.input.middleRows(t * lanes_, lanes_);
      gg = gru_->backward_sequence(dh);
    }
    double sq = static_cast<double>(g.params.squaredNorm());
    if (gg) sq += static_cast<double>(gg->params.squaredNorm());
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw TrainingError("Tower::apply_gradient: non-finite gradient norm");
    if (max_norm > 0 && norm > max_norm) {
      const Real scale = static_cast<Real>(max_norm / norm);
      g.params *= scale;
      if (gg) gg->params *= scale;
    }
    nn::adam_step(mlp_.params().values(), g.params, mlp_opt_);
    if (gg) nn::adam_step(gru_->params().values(), gg->params, gru_opt_);
    return norm;
  }

  bool all_finite() const { return mlp_.params().all_finite() && (!gru_ || gru_->params().all_finite()); }

  void save(std::ostream& out) const {
    if (gru_) nn::save_params(out, gru_->params());
    nn::save_params(out, mlp_.params());
  }
  void load(std::istream& in) {
    if (gru_) nn::load_params(in, gru_->params());
    nn::load_params(in, mlp_.params());
  }

  nn::FeedforwardNet<Real>& mlp() { return mlp_; }
  std::optional<nn::RecurrentCell<Real>>& gru() { return gru_; }

 private:
  static Mat stack(const std::vector<Mat>& rows) {
    const Eigen::Index lanes = rows.front().rows();
    Mat x(lanes * static_cast<Eigen::Index>(rows.size()), rows.front().cols());
    for (std::size_t t = 0; t < rows.size(); ++t) x.middleRows(static_cast<Eigen::Index>(t) * lanes, lanes) = rows[t];
    return x;
  }

  std::optional<nn::RecurrentCell<Real>> gru_;
  nn::FeedforwardNet<Real> mlp_;
  nn::AdamState<Real> gru_opt_, mlp_opt_;
  Eigen::Index lanes_ = 0;
};

struct HiddenState {
  Mat actor, critic;
};

struct ActResult {
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
};

// Row-wise log-softmax.
inline Mat log_softmax(const Mat& logits) {
  Mat out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Real m = out.row(r).maxCoeff();
    const Real lse = m + std::log((out.row(r).array() - m).exp().sum());
    out.row(r).array() -= lse;
  }
  return out;
}

// Separate actor and critic towers of the same shape.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(const NetworkShape& shape, double learning_rate, Rng& rng)
      : shape_(shape),
        actor_(shape, shape.actions, 0.01, learning_rate, rng),
        critic_(shape, 1, 1.0, learning_rate, rng) {
    if (shape.observation_size <= 0 || shape.actions < 2) throw ConfigError("ActorCritic: bad network shape");
  }

  const NetworkShape& shape() const { return shape_; }
  HiddenState initial_hidden(Eigen::Index lanes) const {
    return {actor_.initial_hidden(lanes), critic_.initial_hidden(lanes)};
  }

  // Samples one action per lane from the softmax policy.
  ActResult act(const Mat& obs, HiddenState& h, Rng& rng) const {
    if (obs.cols() != shape_.observation_size)
      throw UsageError("ActorCritic::act: observation width does not match the network");
    const Mat logp = log_softmax(actor_.step(obs, h.actor));
    const Mat v = critic_.step(obs, h.critic);
    ActResult out;
    const auto lanes = static_cast<std::size_t>(obs.rows());
    out.actions.resize(lanes);
    out.log_probs.resize(lanes);
    out.values.resize(lanes);
    for (Eigen::Index l = 0; l < obs.rows(); ++l) {
      const double u = rng.uniform();
      double acc = 0.0;
      int a = static_cast<int>(logp.cols()) - 1;
      for (int k = 0; k < logp.cols(); ++k) {
        acc += std::exp(static_cast<double>(logp(l, k)));
        if (u < acc) {
          a = k;
          break;
        }
      }
      out.actions[l] = a;
      out.log_probs[l] = static_cast<double>(logp(l, a));
      out.values[l] = static_cast<double>(v(l, 0));
    }
    return out;
  }

  // Action probabilities for a single step without touching any state.
  Mat probabilities(const Mat& obs, HiddenState h) const { return log_softmax(actor_.step(obs, h.actor)).array().exp(); }

  Tower& actor() { return actor_; }
  Tower& critic() { return critic_; }
  const Tower& actor() const { return actor_; }
  const Tower& critic() const { return critic_; }

  bool all_finite() const { return actor_.all_finite() && critic_.all_finite(); }

  void save(std::ostream& out) const {
    actor_.save(out);
    critic_.save(out);
  }
  void load(std::istream& in) {
    actor_.load(in);
    critic_.load(in);
  }

 private:
  NetworkShape shape_;
  Tower actor_, critic_;
};

}  // namespace recip::agents
