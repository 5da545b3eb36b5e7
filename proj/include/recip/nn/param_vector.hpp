#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "recip/error.hpp"

namespace recip::nn {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

struct Segment {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

// Flat parameter storage with a named, column-major matrix per segment.
// Segments are appended while building a network; the layout is fixed once
// freeze() is called.
template <class Scalar>
class ParamVector {
 public:
  using MatrixMap = Eigen::Map<Matrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const Matrix<Scalar>>;

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    if (frozen_) throw UsageError("ParamVector: layout is frozen, cannot add '" + name + "'");
    if (rows <= 0 || cols <= 0) throw ConfigError("ParamVector: segment '" + name + "' has empty shape");
    Segment seg{std::move(name), values_.size(), rows, cols};
    values_.conservativeResize(values_.size() + seg.size());
    values_.tail(seg.size()).setZero();
    layout_.push_back(std::move(seg));
    return layout_.size() - 1;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  MatrixMap matrix(std::size_t i) {
    const auto& s = layout_.at(i);
    return MatrixMap(values_.data() + s.offset, s.rows, s.cols);
  }
  ConstMatrixMap matrix(std::size_t i) const {
    const auto& s = layout_.at(i);
    return ConstMatrixMap(values_.data() + s.offset, s.rows, s.cols);
  }

  // View of a segment inside a gradient vector laid out like this one.
  MatrixMap matrix_in(Vector<Scalar>& flat, std::size_t i) const {
    const auto& s = layout_.at(i);
    return MatrixMap(flat.data() + s.offset, s.rows, s.cols);
  }

  Eigen::Index size() const { return values_.size(); }
  Vector<Scalar>& values() { return values_; }
  const Vector<Scalar>& values() const { return values_; }
  const std::vector<Segment>& layout() const { return layout_; }

  bool all_finite() const { return values_.allFinite(); }

 private:
  Vector<Scalar> values_;
  std::vector<Segment> layout_;
  bool frozen_ = false;
};

}  // namespace recip::nn
