#pragma once

#include <optional>
#include <span>
#include <vector>

#include "recip/nn/init.hpp"
#include "recip/nn/param_vector.hpp"

namespace recip::nn {

template <class Scalar>
struct SequenceGradients {
  Vector<Scalar> params;
  std::vector<Matrix<Scalar>> inputs;
  Matrix<Scalar> initial_hidden;
};

// Gated recurrent unit with gate order (reset, update, candidate):
//   r = sigmoid(Wir x + bir + Whr h + bhr)
//   z = sigmoid(Wiz x + biz + Whz h + bhz)
//   n = tanh(Win x + bin + r * (Whn h + bhn))
//   h' = (1 - z) * n + z * h
template <class Scalar>
class RecurrentCell {
 public:
  using Mat = Matrix<Scalar>;

  RecurrentCell() = default;

  RecurrentCell(int input_size, int hidden_size, Rng& rng) : input_size_(input_size), hidden_size_(hidden_size) {
    if (input_size <= 0 || hidden_size <= 0) throw ConfigError("RecurrentCell: sizes must be positive");
    w_in_ = params_.add("gru.weight_input", 3 * hidden_size, input_size);
    b_in_ = params_.add("gru.bias_input", 3 * hidden_size, 1);
    w_hid_ = params_.add("gru.weight_hidden", 3 * hidden_size, hidden_size);
    b_hid_ = params_.add("gru.bias_hidden", 3 * hidden_size, 1);
    params_.freeze();
    for (int g = 0; g < 3; ++g) {
      orthogonal_init(params_.matrix(w_in_).middleRows(g * hidden_size, hidden_size), 1.0, rng);
      orthogonal_init(params_.matrix(w_hid_).middleRows(g * hidden_size, hidden_size), 1.0, rng);
    }
  }

  int input_size() const { return input_size_; }
  int hidden_size() const { return hidden_size_; }
  ParamVector<Scalar>& params() { return params_; }
  const ParamVector<Scalar>& params() const { return params_; }

  Mat zero_state(Eigen::Index batch) const { return Mat::Zero(batch, hidden_size_); }

  // One step without recording; returns the updated hidden state.
  Mat step(const Mat& x, const Mat& h) const { return compute(x, h).h_next; }

  // Runs a whole sequence from h0 and records it for backward_sequence().
  std::vector<Mat> forward_sequence(std::span<const Mat> xs, const Mat& h0) {
    Trace trace;
    if (!xs.empty()) {
      const Eigen::Index batch = xs.front().rows();
      trace.inputs.resize(batch * static_cast<Eigen::Index>(xs.size()), input_size_);
      for (std::size_t t = 0; t < xs.size(); ++t) {
        if (xs[t].cols() != input_size_ || xs[t].rows() != batch)
          throw ConfigError("RecurrentCell: input width mismatch");
        trace.inputs.middleRows(static_cast<Eigen::Index>(t) * batch, batch) = xs[t];
      }
    }
    const Mat gi_all = project_input(trace.inputs);
    trace.steps.reserve(xs.size());
    std::vector<Mat> hs;
    hs.reserve(xs.size());
    const Mat* h = &h0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const Eigen::Index batch = xs[t].rows();
      trace.steps.push_back(recur(gi_all.middleRows(static_cast<Eigen::Index>(t) * batch, batch), *h));
      hs.push_back(trace.steps.back().h_next);
      h = &hs.back();
    }
    trace_ = std::move(trace);
    return hs;
  }

  // upstream[t] is the gradient of the loss w.r.t. the hidden state emitted at t.
  SequenceGradients<Scalar> backward_sequence(std::span<const Mat> upstream) const {
    if (!trace_) throw UsageError("RecurrentCell::backward_sequence called without a recorded forward pass");
    const auto& recs = trace_->steps;
    if (upstream.size() != recs.size()) throw UsageError("RecurrentCell::backward_sequence: sequence length mismatch");
    const int hs = hidden_size_;
    SequenceGradients<Scalar> g;
    g.params = Vector<Scalar>::Zero(params_.size());
    g.inputs.resize(recs.size());
    auto gw_in = params_.matrix_in(g.params, w_in_);
    auto gb_in = params_.matrix_in(g.params, b_in_);
    auto gw_hid = params_.matrix_in(g.params, w_hid_);
    auto gb_hid = params_.matrix_in(g.params, b_hid_);
    const Eigen::Index batch = recs.empty() ? 0 : recs.front().h_prev.rows();
    Mat dh = Mat::Zero(batch, hs);
    Mat dgi_all(batch * static_cast<Eigen::Index>(recs.size()), 3 * hs);
    Mat dgh(batch, 3 * hs);
    for (std::size_t t = recs.size(); t-- > 0;) {
      const auto& rec = recs[t];
      dh += upstream[t];
      const auto r = rec.r.array();
      const auto z = rec.z.array();
      const auto n = rec.n.array();
      const auto dha = dh.array();
      auto dn_pre = (dha * (Scalar(1) - z) * (Scalar(1) - n.square())).eval();
      auto dz_pre = (dha * (rec.h_prev.array() - n) * z * (Scalar(1) - z)).eval();
      auto dr_pre = (dn_pre * rec.gh_n.array() * r * (Scalar(1) - r)).eval();
      auto dgi = dgi_all.middleRows(static_cast<Eigen::Index>(t) * batch, batch);
      dgi.leftCols(hs) = dr_pre.matrix();
      dgi.middleCols(hs, hs) = dz_pre.matrix();
      dgi.rightCols(hs) = dn_pre.matrix();
      dgh.leftCols(hs) = dr_pre.matrix();
      dgh.middleCols(hs, hs) = dz_pre.matrix();
      dgh.rightCols(hs) = (dn_pre * r).matrix();
      gw_hid.noalias() += dgh.transpose() * rec.h_prev;
      gb_hid += dgh.colwise().sum().transpose();
      Mat dh_prev = (dha * z).matrix();
      dh_prev.noalias() += dgh * params_.matrix(w_hid_);
      dh = std::move(dh_prev);
    }
    if (!recs.empty()) {
      gw_in.noalias() = dgi_all.transpose() * trace_->inputs;
      gb_in = dgi_all.colwise().sum().transpose();
      const Mat dx = dgi_all * params_.matrix(w_in_);
      for (std::size_t t = 0; t < recs.size(); ++t) g.inputs[t] = dx.middleRows(static_cast<Eigen::Index>(t) * batch, batch);
    }
    g.initial_hidden = std::move(dh);
    return g;
  }

  bool has_trace() const { return trace_.has_value(); }

 private:
  struct StepRecord {
    Mat h_prev, r, z, n, gh_n, h_next;
  };
  struct Trace {
    Mat inputs;  // all steps stacked, t * batch + row
    std::vector<StepRecord> steps;
  };

  Mat project_input(const Mat& x) const {
    Mat gi = x * params_.matrix(w_in_).transpose();
    gi.rowwise() += params_.matrix(b_in_).col(0).transpose();
    return gi;
  }

  StepRecord compute(const Mat& x, const Mat& h) const {
    if (x.cols() != input_size_) throw ConfigError("RecurrentCell: input width mismatch");
    return recur(project_input(x), h);
  }

  template <class Derived>
  StepRecord recur(const Eigen::MatrixBase<Derived>& gi, const Mat& h) const {
    if (h.cols() != hidden_size_ || h.rows() != gi.rows())
      throw ConfigError("RecurrentCell: hidden state shape mismatch");
    const int hs = hidden_size_;
    Mat gh = h * params_.matrix(w_hid_).transpose();
    gh.rowwise() += params_.matrix(b_hid_).col(0).transpose();
    StepRecord rec;
    rec.h_prev = h;
    rec.r = sigmoid(gi.leftCols(hs) + gh.leftCols(hs));
    rec.z = sigmoid(gi.middleCols(hs, hs) + gh.middleCols(hs, hs));
    rec.gh_n = gh.rightCols(hs);
    rec.n = (gi.rightCols(hs).array() + rec.r.array() * rec.gh_n.array()).tanh().matrix();
    rec.h_next = ((Scalar(1) - rec.z.array()) * rec.n.array() + rec.z.array() * h.array()).matrix();
    return rec;
  }

  template <class Derived>
  static Mat sigmoid(const Eigen::MatrixBase<Derived>& v) {
    return (Scalar(1) / (Scalar(1) + (-v.array()).exp())).matrix();
  }

  int input_size_ = 0;
  int hidden_size_ = 0;
  ParamVector<Scalar> params_;
  std::size_t w_in_ = 0, b_in_ = 0, w_hid_ = 0, b_hid_ = 0;
  std::optional<Trace> trace_;
};

}  // namespace recip::nn
