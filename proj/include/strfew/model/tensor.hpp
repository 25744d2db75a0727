// Copyright 2026 The strfew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "strfew/core/random.hpp"

namespace strfew::nn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

enum class Mode { kTrain, kInfer };

/// Dense NCHW batch. Image i is addressable as an (H*W) x C column-major
/// matrix, one contiguous column per channel.
template <typename Scalar>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(n_) * c_ * h_ * w_)) {}

  Eigen::Index plane() const { return static_cast<Eigen::Index>(h) * w; }
  Eigen::Index image_size() const { return plane() * c; }

  Eigen::Map<Mat<Scalar>> image(int i) {
    return Eigen::Map<Mat<Scalar>>(data.data() + i * image_size(), plane(), c);
  }
  Eigen::Map<const Mat<Scalar>> image(int i) const {
    return Eigen::Map<const Mat<Scalar>>(data.data() + i * image_size(), plane(), c);
  }

  Scalar& at(int b, int ch, int y, int x) {
    return data[((static_cast<Eigen::Index>(b) * c + ch) * h + y) * w + x];
  }
  Scalar at(int b, int ch, int y, int x) const {
    return data[((static_cast<Eigen::Index>(b) * c + ch) * h + y) * w + x];
  }

  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_string() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }

  template <typename Other>
  Tensor4<Other> cast() const {
    Tensor4<Other> out;
    out.n = n; out.c = c; out.h = h; out.w = w;
    out.data = data.template cast<Other>();
    return out;
  }
};

/// Time-major batch of sequences: rows [t*batch, (t+1)*batch) hold step t.
template <typename Scalar>
struct SeqBatch {
  int steps = 0;
  int batch = 0;
  Mat<Scalar> data;  // (steps * batch) x dim

  SeqBatch() = default;
  SeqBatch(int steps_, int batch_, int dim)
      : steps(steps_), batch(batch_), data(Mat<Scalar>::Zero(static_cast<Eigen::Index>(steps_) * batch_, dim)) {}

  Eigen::Index dim() const { return data.cols(); }
  auto step(int t) { return data.middleRows(static_cast<Eigen::Index>(t) * batch, batch); }
  auto step(int t) const { return data.middleRows(static_cast<Eigen::Index>(t) * batch, batch); }

  /// Steps x dim matrix for one batch item.
  Mat<Scalar> item(int b) const {
    Mat<Scalar> out(steps, data.cols());
    for (int t = 0; t < steps; ++t) out.row(t) = data.row(static_cast<Eigen::Index>(t) * batch + b);
    return out;
  }
  void set_item(int b, const Mat<Scalar>& m) {
    for (int t = 0; t < steps; ++t) data.row(static_cast<Eigen::Index>(t) * batch + b) = m.row(t);
  }
};

/// Trainable parameter or buffer (running statistics). Buffers carry no
/// gradient and are skipped by optimizers but included in checkpoints and
/// moving averages.
template <typename Scalar>
struct Param {
  Mat<Scalar> value;
  Mat<Scalar> grad;
  bool trainable = true;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols, bool is_trainable = true)
      : value(Mat<Scalar>::Zero(rows, cols)), grad(Mat<Scalar>::Zero(rows, cols)), trainable(is_trainable) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
using ParamVisitor = std::function<void(const std::string& name, Param<Scalar>& p)>;

template <typename Scalar>
struct NamedParam {
  std::string name;
  Param<Scalar>* param;
};

/// He (Kaiming) normal initialisation: N(0, 2 / fan_in).
template <typename Scalar>
void he_normal(Mat<Scalar>& m, Eigen::Index fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.normal() * std);
}

template <typename Scalar>
void uniform_init(Mat<Scalar>& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// Row-wise softmax.
template <typename Derived>
Mat<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> out = x;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Scalar mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <typename Derived>
Mat<typename Derived::Scalar> log_softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> out = x;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Scalar mx = out.row(r).maxCoeff();
    const Scalar lse = mx + std::log((out.row(r).array() - mx).exp().sum());
    out.row(r).array() -= lse;
  }
  return out;
}

/// Backward of row-wise softmax given the forward output `p` and dL/dp.
template <typename Scalar>
Mat<Scalar> softmax_rows_backward(const Mat<Scalar>& p, const Mat<Scalar>& grad_p) {
  Mat<Scalar> out = p.cwiseProduct(grad_p);
  const auto dots = out.rowwise().sum();
  out -= (p.array().colwise() * dots.array()).matrix();
  return out;
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace strfew::nn
