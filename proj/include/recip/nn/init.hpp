#pragma once

#include <Eigen/QR>

#include "recip/nn/param_vector.hpp"
#include "recip/rng.hpp"

namespace recip::nn {

// Orthogonal initialization scaled by gain (QR of a Gaussian matrix with the
// sign of R's diagonal folded back in).
template <class Derived>
void orthogonal_init(Eigen::MatrixBase<Derived>&& w, double gain, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  const auto rows = w.rows();
  const auto cols = w.cols();
  const bool tall = rows >= cols;
  Eigen::MatrixXd a(tall ? rows : cols, tall ? cols : rows);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  if (tall)
    w = (gain * q).template cast<Scalar>();
  else
    w = (gain * q.transpose()).template cast<Scalar>();
}

}  // namespace recip::nn
