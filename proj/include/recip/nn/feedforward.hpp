#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recip/nn/init.hpp"
#include "recip/nn/param_vector.hpp"

namespace recip::nn {

template <class Scalar>
struct Gradients {
  Vector<Scalar> params;
  Matrix<Scalar> input;
};

// Multi-layer perceptron: tanh hidden layers feeding one or more linear
// heads. Inputs are batches with one sample per row.
template <class Scalar>
class FeedforwardNet {
 public:
  using Mat = Matrix<Scalar>;

  FeedforwardNet() = default;

  // head_gains scales the orthogonal init of each head (default 1).
  FeedforwardNet(int input_size, std::vector<int> hidden_sizes, std::vector<int> head_sizes, Rng& rng,
                 std::vector<double> head_gains = {})
      : input_size_(input_size), hidden_sizes_(std::move(hidden_sizes)), head_sizes_(std::move(head_sizes)) {
    if (input_size_ <= 0) throw ConfigError("FeedforwardNet: input size must be positive");
    if (head_sizes_.empty()) throw ConfigError("FeedforwardNet: at least one head required");
    int prev = input_size_;
    for (std::size_t l = 0; l < hidden_sizes_.size(); ++l) {
      const int width = hidden_sizes_[l];
      if (width <= 0) throw ConfigError("FeedforwardNet: hidden sizes must be positive");
      hidden_w_.push_back(params_.add("hidden" + std::to_string(l) + ".weight", width, prev));
      hidden_b_.push_back(params_.add("hidden" + std::to_string(l) + ".bias", width, 1));
      prev = width;
    }
    for (std::size_t h = 0; h < head_sizes_.size(); ++h) {
      if (head_sizes_[h] <= 0) throw ConfigError("FeedforwardNet: head sizes must be positive");
      head_w_.push_back(params_.add("head" + std::to_string(h) + ".weight", head_sizes_[h], prev));
      head_b_.push_back(params_.add("head" + std::to_string(h) + ".bias", head_sizes_[h], 1));
    }
    params_.freeze();
    for (auto w : hidden_w_) orthogonal_init(params_.matrix(w), std::sqrt(2.0), rng);
    for (std::size_t h = 0; h < head_w_.size(); ++h)
      orthogonal_init(params_.matrix(head_w_[h]), h < head_gains.size() ? head_gains[h] : 1.0, rng);
  }

  int input_size() const { return input_size_; }
  int output_width() const { return hidden_sizes_.empty() ? input_size_ : hidden_sizes_.back(); }
  const std::vector<int>& head_sizes() const { return head_sizes_; }
  ParamVector<Scalar>& params() { return params_; }
  const ParamVector<Scalar>& params() const { return params_; }

  // Forward pass without recording.
  std::vector<Mat> evaluate(const Mat& x) const {
    check_input(x);
    Mat a = x;
    for (std::size_t l = 0; l < hidden_w_.size(); ++l) a = affine(a, hidden_w_[l], hidden_b_[l]).array().tanh().matrix();
    return heads(a);
  }

  // Forward pass that records activations for a subsequent backward().
  std::vector<Mat> forward(const Mat& x) {
    check_input(x);
    Trace trace;
    trace.activations.reserve(hidden_w_.size() + 1);
    trace.activations.push_back(x);
    for (std::size_t l = 0; l < hidden_w_.size(); ++l)
      trace.activations.push_back(affine(trace.activations.back(), hidden_w_[l], hidden_b_[l]).array().tanh().matrix());
    auto out = heads(trace.activations.back());
    trace_ = std::move(trace);
    return out;
  }

  // Gradients of sum(upstream[h] .* head_h) w.r.t. parameters and input.
  Gradients<Scalar> backward(std::span<const Mat> upstream) const {
    if (!trace_) throw UsageError("FeedforwardNet::backward called without a recorded forward pass");
    if (upstream.size() != head_w_.size()) throw UsageError("FeedforwardNet::backward: one upstream gradient per head required");
    const auto& acts = trace_->activations;
    const Eigen::Index batch = acts.front().rows();
    Gradients<Scalar> g;
    g.params = Vector<Scalar>::Zero(params_.size());
    Mat da = Mat::Zero(batch, output_width());
    for (std::size_t h = 0; h < head_w_.size(); ++h) {
      const Mat& dy = upstream[h];
      if (dy.rows() != batch || dy.cols() != head_sizes_[h]) throw UsageError("FeedforwardNet::backward: upstream shape mismatch");
      params_.matrix_in(g.params, head_w_[h]).noalias() = dy.transpose() * acts.back();
      params_.matrix_in(g.params, head_b_[h]) = dy.colwise().sum().transpose();
      da.noalias() += dy * params_.matrix(head_w_[h]);
    }
    for (std::size_t l = hidden_w_.size(); l-- > 0;) {
      const Mat& a = acts[l + 1];
      Mat dz = (da.array() * (Scalar(1) - a.array().square())).matrix();
      params_.matrix_in(g.params, hidden_w_[l]).noalias() = dz.transpose() * acts[l];
      params_.matrix_in(g.params, hidden_b_[l]) = dz.colwise().sum().transpose();
      da.noalias() = dz * params_.matrix(hidden_w_[l]);
    }
    g.input = std::move(da);
    return g;
  }

  bool has_trace() const { return trace_.has_value(); }
  void clear_trace() { trace_.reset(); }

 private:
  struct Trace {
    std::vector<Mat> activations;
  };

  void check_input(const Mat& x) const {
    if (x.cols() != input_size_)
      throw ConfigError("FeedforwardNet: input width " + std::to_string(x.cols()) + " does not match declared " +
                        std::to_string(input_size_));
  }

  Mat affine(const Mat& a, std::size_t w, std::size_t b) const {
    Mat z = a * params_.matrix(w).transpose();
    z.rowwise() += params_.matrix(b).col(0).transpose();
    return z;
  }

  std::vector<Mat> heads(const Mat& a) const {
    std::vector<Mat> out;
    out.reserve(head_w_.size());
    for (std::size_t h = 0; h < head_w_.size(); ++h) out.push_back(affine(a, head_w_[h], head_b_[h]));
    return out;
  }

  int input_size_ = 0;
  std::vector<int> hidden_sizes_;
  std::vector<int> head_sizes_;
  ParamVector<Scalar> params_;
  std::vector<std::size_t> hidden_w_, hidden_b_, head_w_, head_b_;
  std::optional<Trace> trace_;
};

}  // namespace recip::nn
