#pragma once

#include <cmath>
#include <string>

#include "recip/nn/param_vector.hpp"

namespace recip::nn {

template <class Scalar>
struct AdamState {
  long step = 0;
  Vector<Scalar> m;
  Vector<Scalar> v;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(Eigen::Index size, double lr)
      : m(Vector<Scalar>::Zero(size)), v(Vector<Scalar>::Zero(size)), learning_rate(lr) {}
};

// One bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
template <class Scalar>
void adam_step(Vector<Scalar>& params, const Vector<Scalar>& grad, AdamState<Scalar>& state) {
  if (grad.size() != params.size() || state.m.size() != params.size())
    throw UsageError("adam_step: parameter, gradient and moment sizes differ");
  if (!grad.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < grad.size() && std::isfinite(static_cast<double>(grad[bad])); ++bad) {
    }
    throw TrainingError("adam_step: non-finite gradient at index " + std::to_string(bad) + " (step " +
                        std::to_string(state.step + 1) + ")");
  }
  ++state.step;
  const Scalar b1 = static_cast<Scalar>(state.beta1);
  const Scalar b2 = static_cast<Scalar>(state.beta2);
  state.m = b1 * state.m + (Scalar(1) - b1) * grad;
  state.v = b2 * state.v + (Scalar(1) - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Scalar step_size = static_cast<Scalar>(state.learning_rate / c1);
  const Scalar sqrt_c2 = static_cast<Scalar>(std::sqrt(c2));
  params.array() -= step_size * state.m.array() / (state.v.array().sqrt() / sqrt_c2 + static_cast<Scalar>(state.epsilon));
}

// Rescales grad in place so its Euclidean norm is at most max_norm; returns the original norm.
template <class Scalar>
double clip_grad_norm(Vector<Scalar>& grad, double max_norm) {
  const double norm = static_cast<double>(grad.norm());
  if (max_norm > 0 && norm > max_norm) grad *= static_cast<Scalar>(max_norm / norm);
  return norm;
}

}  // namespace recip::nn
