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

#include <string>

#include "strfew/model/layers.hpp"

namespace strfew::nn {

enum class BackboneKind { kMini, kVgg7, kResnet29 };

std::string to_string(BackboneKind k);
BackboneKind parse_backbone(const std::string& name);

/// Convolutional feature extractor. The final map is averaged over height
/// and each column becomes one step of the feature sequence.
template <typename Scalar>
class Backbone {
 public:
  Backbone() = default;
  /// With `input_grad` unset, backward skips the gradient with respect to
  /// the input image and returns an empty tensor.
  Backbone(BackboneKind kind, int in_channels, Rng& rng, bool input_grad = false)
      : kind_(kind), in_channels_(in_channels), input_grad_(input_grad) {
    switch (kind) {
      case BackboneKind::kMini: build_mini(rng); break;
      case BackboneKind::kVgg7: build_vgg7(rng); break;
      case BackboneKind::kResnet29: build_resnet29(rng); break;
    }
  }

  BackboneKind kind() const { return kind_; }
  int out_channels() const { return out_channels_; }

  /// Raw feature map, N x C x H' x W'.
  Tensor4<Scalar> forward_map(const Tensor4<Scalar>& x, Mode mode) {
    if (x.c != in_channels_ || x.h != kInputHeight || x.w != kInputWidth) {
      throw ShapeError("backbone expects Nx" + std::to_string(in_channels_) + "x" + std::to_string(kInputHeight) +
                       "x" + std::to_string(kInputWidth) + ", got " + x.shape_string());
    }
    return net_.forward(x, mode);
  }
  Tensor4<Scalar> backward_map(const Tensor4<Scalar>& grad) { return net_.backward(grad); }

  SeqBatch<Scalar> forward(const Tensor4<Scalar>& x, Mode mode) {
    const Tensor4<Scalar> m = forward_map(x, mode);
    map_h_ = m.h;
    SeqBatch<Scalar> seq(m.w, m.n, m.c);
    const Scalar inv_h = Scalar(1) / static_cast<Scalar>(m.h);
    for (int b = 0; b < m.n; ++b) {
      for (int c = 0; c < m.c; ++c) {
        for (int y = 0; y < m.h; ++y) {
          for (int t = 0; t < m.w; ++t) seq.data(static_cast<Eigen::Index>(t) * m.n + b, c) += m.at(b, c, y, t) * inv_h;
        }
      }
    }
    return seq;
  }

  Tensor4<Scalar> backward(const SeqBatch<Scalar>& grad) {
    Tensor4<Scalar> g(grad.batch, static_cast<int>(grad.dim()), map_h_, grad.steps);
    const Scalar inv_h = Scalar(1) / static_cast<Scalar>(map_h_);
    for (int b = 0; b < g.n; ++b) {
      for (int c = 0; c < g.c; ++c) {
        for (int y = 0; y < g.h; ++y) {
          for (int t = 0; t < g.w; ++t) g.at(b, c, y, t) = grad.data(static_cast<Eigen::Index>(t) * g.n + b, c) * inv_h;
        }
      }
    }
    return net_.backward(g);
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) { net_.visit(prefix, fn); }

  static constexpr int kInputHeight = 32;
  static constexpr int kInputWidth = 100;

 private:
  Conv2d<Scalar>& conv(int in, int out, Rng& rng, int k = 3, int sh = 1, int sw = 1, int ph = 1, int pw = 1,
                       bool bias = true) {
    auto& c = net_.add(Conv2d<Scalar>(ConvSpec{in, out, k, k, sh, sw, ph, pw, bias}, rng));
    if (net_.size() == 1) c.set_input_grad(input_grad_);
    return c;
  }
  void conv_bn_relu(int in, int out, Rng& rng, int k = 3, int sh = 1, int sw = 1, int ph = 1, int pw = 1) {
    conv(in, out, rng, k, sh, sw, ph, pw, false);
    net_.add(BatchNorm2d<Scalar>(out));
    net_.add(Relu<Scalar>());
  }
  void conv_relu(int in, int out, Rng& rng, int k = 3, int ph = 1) {
    conv(in, out, rng, k, 1, 1, ph, ph, true);
    net_.add(Relu<Scalar>());
  }
  void pool2() { net_.add(MaxPool2d<Scalar>()); }
  void pool_tall() { net_.add(MaxPool2d<Scalar>(PoolSpec{2, 2, 2, 1, 0, 1})); }

  // 32x100 -> 64 x 4 x 26
  void build_mini(Rng& rng) {
    conv_relu(in_channels_, 16, rng);
    pool2();
    conv_relu(16, 32, rng);
    pool2();
    pool_tall();
    conv_relu(32, 64, rng);
    out_channels_ = 64;
  }

  // 32x100 -> 512 x 1 x 26
  void build_vgg7(Rng& rng) {
    conv_relu(in_channels_, 64, rng);
    pool2();
    conv_relu(64, 128, rng);
    pool2();
    conv_relu(128, 256, rng);
    conv_relu(256, 256, rng);
    pool_tall();
    conv_bn_relu(256, 512, rng);
    conv_bn_relu(512, 512, rng);
    pool_tall();
    conv_relu(512, 512, rng, 2, 0);
    out_channels_ = 512;
  }

  // 32x100 -> 512 x 1 x 26. Residual stages of 1, 2, 5 and 3 blocks.
  void build_resnet29(Rng& rng) {
    conv_bn_relu(in_channels_, 32, rng);
    conv_bn_relu(32, 64, rng);
    pool2();
    add_blocks(64, 128, 1, rng);
    conv_bn_relu(128, 128, rng);
    pool2();
    add_blocks(128, 256, 2, rng);
    conv_bn_relu(256, 256, rng);
    pool_tall();
    add_blocks(256, 512, 5, rng);
    conv_bn_relu(512, 512, rng);
    add_blocks(512, 512, 3, rng);
    conv_bn_relu(512, 512, rng, 2, 2, 1, 0, 1);
    conv_bn_relu(512, 512, rng, 2, 1, 1, 0, 0);
    out_channels_ = 512;
  }
  void add_blocks(int in, int out, int count, Rng& rng) {
    for (int i = 0; i < count; ++i) net_.add(BasicBlock<Scalar>(i == 0 ? in : out, out, rng));
  }

  BackboneKind kind_ = BackboneKind::kMini;
  int in_channels_ = 1;
  bool input_grad_ = false;
  int out_channels_ = 0;
  int map_h_ = 1;
  Sequential<Scalar> net_;
};

}  // namespace strfew::nn
