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

#include <stdexcept>

#include "strfew/model/layers.hpp"

namespace strfew::nn {

/// Four-way rotation classifier on a backbone feature map. The map is
/// averaged over width and flattened before two dense layers.
template <typename Scalar>
class RotationHead {
 public:
  static constexpr int kClasses = 4;

  RotationHead() = default;
  RotationHead(int channels, int map_h, int hidden, Rng& rng)
      : fc1_(channels * map_h, hidden, rng), fc2_(hidden, kClasses, rng) {}

  Mat<Scalar> forward(const Tensor4<Scalar>& map) {
    n_ = map.n; c_ = map.c; h_ = map.h; w_ = map.w;
    Mat<Scalar> flat(map.n, static_cast<Eigen::Index>(map.c) * map.h);
    for (int b = 0; b < map.n; ++b) {
      for (int c = 0; c < map.c; ++c) {
        for (int y = 0; y < map.h; ++y) {
          Scalar s = 0;
          for (int x = 0; x < map.w; ++x) s += map.at(b, c, y, x);
          flat(b, static_cast<Eigen::Index>(c) * map.h + y) = s / static_cast<Scalar>(map.w);
        }
      }
    }
    hidden_ = fc1_.forward(flat).cwiseMax(Scalar(0));
    return fc2_.forward(hidden_);
  }

  Tensor4<Scalar> backward(const Mat<Scalar>& grad) {
    Mat<Scalar> dh = fc2_.backward(grad);
    dh = (hidden_.array() > Scalar(0)).select(dh, Scalar(0));
    const Mat<Scalar> dflat = fc1_.backward(dh);
    Tensor4<Scalar> dmap(n_, c_, h_, w_);
    const Scalar inv_w = Scalar(1) / static_cast<Scalar>(w_);
    for (int b = 0; b < n_; ++b) {
      for (int c = 0; c < c_; ++c) {
        for (int y = 0; y < h_; ++y) {
          const Scalar g = dflat(b, static_cast<Eigen::Index>(c) * h_ + y) * inv_w;
          for (int x = 0; x < w_; ++x) dmap.at(b, c, y, x) = g;
        }
      }
    }
    return dmap;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    fc1_.visit(prefix + "fc1.", fn);
    fc2_.visit(prefix + "fc2.", fn);
  }

 private:
  Dense<Scalar> fc1_, fc2_;
  Mat<Scalar> hidden_;
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

class DegenerateEmbedding : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Projection to a unit-norm embedding: global average pool, dense layer,
/// L2 normalisation.
template <typename Scalar>
class ContrastHead {
 public:
  ContrastHead() = default;
  ContrastHead(int channels, int dim, Rng& rng) : fc_(channels, dim, rng) {}

  int dim() const { return fc_.out(); }

  Mat<Scalar> forward(const Tensor4<Scalar>& map) {
    n_ = map.n; c_ = map.c; h_ = map.h; w_ = map.w;
    Mat<Scalar> pooled(map.n, map.c);
    for (int b = 0; b < map.n; ++b) pooled.row(b) = map.image(b).colwise().mean();
    const Mat<Scalar> z = fc_.forward(pooled);
    norms_ = z.rowwise().norm();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      if (!(norms_(r) > Scalar(0)) || !std::isfinite(static_cast<double>(norms_(r)))) {
        throw DegenerateEmbedding("projection head produced a zero or non-finite vector; re-initialise the head");
      }
    }
    out_ = z.array().colwise() / norms_.array();
    return out_;
  }

  Tensor4<Scalar> backward(const Mat<Scalar>& grad) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dots = out_.cwiseProduct(grad).rowwise().sum();
    Mat<Scalar> dz = grad - (out_.array().colwise() * dots.array()).matrix();
    dz = dz.array().colwise() / norms_.array();
    const Mat<Scalar> dpooled = fc_.backward(dz);
    Tensor4<Scalar> dmap(n_, c_, h_, w_);
    const Scalar inv = Scalar(1) / static_cast<Scalar>(h_ * w_);
    for (int b = 0; b < n_; ++b) dmap.image(b).rowwise() = dpooled.row(b) * inv;
    return dmap;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) { fc_.visit(prefix + "fc.", fn); }

 private:
  Dense<Scalar> fc_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms_;
  Mat<Scalar> out_;
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

}  // namespace strfew::nn
