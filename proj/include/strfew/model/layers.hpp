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

#include <algorithm>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "strfew/model/tensor.hpp"

namespace strfew::nn {

/// Layer over NCHW batches with an explicit backward pass. Forward caches
/// whatever backward needs; backward accumulates parameter gradients and
/// returns the gradient with respect to the forward input.
template <typename Scalar>
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode mode) = 0;
  virtual Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) = 0;
  virtual void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {}
  virtual std::unique_ptr<Module> clone() const = 0;
};

template <typename Scalar, typename Derived>
class ModuleBase : public Module<Scalar> {
 public:
  std::unique_ptr<Module<Scalar>> clone() const override {
    return std::make_unique<Derived>(static_cast<const Derived&>(*this));
  }
};

struct ConvSpec {
  int in = 1, out = 1;
  int kh = 3, kw = 3;
  int sh = 1, sw = 1;
  int ph = 1, pw = 1;
  bool bias = true;
};

/// 2-D convolution via im2col and one GEMM per image. Weights are stored as
/// a (in*kh*kw) x out matrix.
template <typename Scalar>
class Conv2d : public ModuleBase<Scalar, Conv2d<Scalar>> {
 public:
  Conv2d(const ConvSpec& spec, Rng& rng) : spec_(spec), weight_(fan_in(), spec.out) {
    he_normal(weight_.value, fan_in(), rng);
    if (spec_.bias) bias_ = Param<Scalar>(1, spec.out);
  }

  Eigen::Index fan_in() const { return static_cast<Eigen::Index>(spec_.in) * spec_.kh * spec_.kw; }
  const ConvSpec& spec() const { return spec_; }
  Param<Scalar>& weight() { return weight_; }
  void set_input_grad(bool on) { input_grad_ = on; }

  int out_h(int h) const { return (h + 2 * spec_.ph - spec_.kh) / spec_.sh + 1; }
  int out_w(int w) const { return (w + 2 * spec_.pw - spec_.kw) / spec_.sw + 1; }

  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode) override {
    if (x.c != spec_.in) {
      throw ShapeError("conv expects " + std::to_string(spec_.in) + " channels, got " + std::to_string(x.c));
    }
    input_ = x;
    const int oh = out_h(x.h), ow = out_w(x.w);
    if (oh < 1 || ow < 1) throw ShapeError("conv input too small: " + x.shape_string());
    Tensor4<Scalar> y(x.n, spec_.out, oh, ow);
    Mat<Scalar> cols;
    for (int i = 0; i < x.n; ++i) {
      im2col(x, i, oh, ow, cols);
      auto yi = y.image(i);
      yi.noalias() = cols * weight_.value;
      if (spec_.bias) yi.rowwise() += bias_.value.row(0);
    }
    return y;
  }

  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    const auto& x = input_;
    const int oh = grad.h, ow = grad.w;
    Tensor4<Scalar> dx;
    if (input_grad_) dx = Tensor4<Scalar>(x.n, x.c, x.h, x.w);
    Mat<Scalar> cols, dcols;
    for (int i = 0; i < x.n; ++i) {
      im2col(x, i, oh, ow, cols);
      const auto gi = grad.image(i);
      weight_.grad.noalias() += cols.transpose() * gi;
      if (spec_.bias) bias_.grad.row(0) += gi.colwise().sum();
      if (input_grad_) {
        dcols.noalias() = gi * weight_.value.transpose();
        col2im(dcols, i, oh, ow, dx);
      }
    }
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) override {
    fn(prefix + "weight", weight_);
    if (spec_.bias) fn(prefix + "bias", bias_);
  }

 private:
  void im2col(const Tensor4<Scalar>& x, int i, int oh, int ow, Mat<Scalar>& cols) const {
    const Eigen::Index hw = static_cast<Eigen::Index>(oh) * ow;
    cols.resize(hw, fan_in());
    const Scalar* src = x.data.data() + i * x.image_size();
    Eigen::Index k = 0;
    for (int c = 0; c < spec_.in; ++c) {
      const Scalar* plane = src + c * x.plane();
      for (int ki = 0; ki < spec_.kh; ++ki) {
        for (int kj = 0; kj < spec_.kw; ++kj, ++k) {
          Scalar* col = cols.data() + k * hw;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * spec_.sh - spec_.ph + ki;
            Scalar* row = col + static_cast<Eigen::Index>(oy) * ow;
            if (iy < 0 || iy >= x.h) {
              std::fill(row, row + ow, Scalar(0));
              continue;
            }
            const Scalar* line = plane + static_cast<Eigen::Index>(iy) * x.w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * spec_.sw - spec_.pw + kj;
              row[ox] = (ix >= 0 && ix < x.w) ? line[ix] : Scalar(0);
            }
          }
        }
      }
    }
  }

  void col2im(const Mat<Scalar>& dcols, int i, int oh, int ow, Tensor4<Scalar>& dx) const {
    const Eigen::Index hw = static_cast<Eigen::Index>(oh) * ow;
    Scalar* dst = dx.data.data() + i * dx.image_size();
    Eigen::Index k = 0;
    for (int c = 0; c < spec_.in; ++c) {
      Scalar* plane = dst + c * dx.plane();
      for (int ki = 0; ki < spec_.kh; ++ki) {
        for (int kj = 0; kj < spec_.kw; ++kj, ++k) {
          const Scalar* col = dcols.data() + k * hw;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * spec_.sh - spec_.ph + ki;
            if (iy < 0 || iy >= dx.h) continue;
            const Scalar* row = col + static_cast<Eigen::Index>(oy) * ow;
            Scalar* line = plane + static_cast<Eigen::Index>(iy) * dx.w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * spec_.sw - spec_.pw + kj;
              if (ix >= 0 && ix < dx.w) line[ix] += row[ox];
            }
          }
        }
      }
    }
  }

  ConvSpec spec_;
  Param<Scalar> weight_;
  Param<Scalar> bias_;
  bool input_grad_ = true;
  Tensor4<Scalar> input_;
};

template <typename Scalar>
class Relu : public ModuleBase<Scalar, Relu<Scalar>> {
 public:
  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode) override {
    out_ = x;
    out_.data = x.data.cwiseMax(Scalar(0));
    return out_;
  }
  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    Tensor4<Scalar> dx = grad;
    dx.data = (out_.data.array() > Scalar(0)).select(grad.data, Scalar(0));
    return dx;
  }

 private:
  Tensor4<Scalar> out_;
};

struct PoolSpec {
  int kh = 2, kw = 2;
  int sh = 2, sw = 2;
  int ph = 0, pw = 0;
};

/// Max pooling; padded cells never win.
template <typename Scalar>
class MaxPool2d : public ModuleBase<Scalar, MaxPool2d<Scalar>> {
 public:
  explicit MaxPool2d(const PoolSpec& spec = {}) : spec_(spec) {}

  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode) override {
    const int oh = (x.h + 2 * spec_.ph - spec_.kh) / spec_.sh + 1;
    const int ow = (x.w + 2 * spec_.pw - spec_.kw) / spec_.sw + 1;
    if (oh < 1 || ow < 1) throw ShapeError("pool input too small: " + x.shape_string());
    in_n_ = x.n; in_c_ = x.c; in_h_ = x.h; in_w_ = x.w;
    Tensor4<Scalar> y(x.n, x.c, oh, ow);
    argmax_.assign(static_cast<std::size_t>(y.data.size()), -1);
    Eigen::Index o = 0;
    for (int b = 0; b < x.n; ++b) {
      for (int c = 0; c < x.c; ++c) {
        const Eigen::Index base = (static_cast<Eigen::Index>(b) * x.c + c) * x.plane();
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox, ++o) {
            Scalar best = -std::numeric_limits<Scalar>::infinity();
            Eigen::Index arg = -1;
            for (int ki = 0; ki < spec_.kh; ++ki) {
              const int iy = oy * spec_.sh - spec_.ph + ki;
              if (iy < 0 || iy >= x.h) continue;
              for (int kj = 0; kj < spec_.kw; ++kj) {
                const int ix = ox * spec_.sw - spec_.pw + kj;
                if (ix < 0 || ix >= x.w) continue;
                const Eigen::Index idx = base + static_cast<Eigen::Index>(iy) * x.w + ix;
                if (arg < 0 || x.data[idx] > best) {
                  best = x.data[idx];
                  arg = idx;
                }
              }
            }
            y.data[o] = best;
            argmax_[static_cast<std::size_t>(o)] = arg;
          }
        }
      }
    }
    return y;
  }

  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    Tensor4<Scalar> dx(in_n_, in_c_, in_h_, in_w_);
    for (Eigen::Index o = 0; o < grad.data.size(); ++o) {
      dx.data[argmax_[static_cast<std::size_t>(o)]] += grad.data[o];
    }
    return dx;
  }

 private:
  PoolSpec spec_;
  int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<Eigen::Index> argmax_;
};

/// Averages over the full spatial extent, producing N x C x 1 x 1.
template <typename Scalar>
class GlobalAvgPool : public ModuleBase<Scalar, GlobalAvgPool<Scalar>> {
 public:
  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode) override {
    in_h_ = x.h; in_w_ = x.w;
    Tensor4<Scalar> y(x.n, x.c, 1, 1);
    for (int b = 0; b < x.n; ++b) y.image(b).row(0) = x.image(b).colwise().mean();
    return y;
  }
  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    Tensor4<Scalar> dx(grad.n, grad.c, in_h_, in_w_);
    const Scalar scale = Scalar(1) / static_cast<Scalar>(dx.plane());
    for (int b = 0; b < grad.n; ++b) {
      auto di = dx.image(b);
      di.rowwise() = grad.image(b).row(0) * scale;
    }
    return dx;
  }

 private:
  int in_h_ = 0, in_w_ = 0;
};

/// Batch normalisation over (N, H, W) per channel. Running statistics are
/// buffers updated with momentum 0.1 in training mode.
template <typename Scalar>
class BatchNorm2d : public ModuleBase<Scalar, BatchNorm2d<Scalar>> {
 public:
  explicit BatchNorm2d(int channels)
      : gamma_(1, channels), beta_(1, channels), mean_(1, channels, false), var_(1, channels, false) {
    gamma_.value.setOnes();
    var_.value.setOnes();
  }

  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode mode) override {
    const int c = x.c;
    RowVec<Scalar> mu(c), var(c);
    if (mode == Mode::kTrain) {
      const Scalar count = static_cast<Scalar>(x.n) * static_cast<Scalar>(x.plane());
      mu.setZero();
      var.setZero();
      for (int b = 0; b < x.n; ++b) mu += x.image(b).colwise().sum();
      mu /= count;
      for (int b = 0; b < x.n; ++b) var += (x.image(b).rowwise() - mu).array().square().matrix().colwise().sum();
      var /= count;
      const Scalar unbiased = count > 1 ? count / (count - 1) : Scalar(1);
      mean_.value.row(0) = Scalar(0.9) * mean_.value.row(0) + Scalar(0.1) * mu;
      var_.value.row(0) = Scalar(0.9) * var_.value.row(0) + Scalar(0.1) * unbiased * var;
    } else {
      mu = mean_.value.row(0);
      var = var_.value.row(0);
    }
    inv_std_ = (var.array() + Scalar(1e-5)).rsqrt().matrix();
    xhat_ = x;
    Tensor4<Scalar> y = x;
    for (int b = 0; b < x.n; ++b) {
      auto xh = xhat_.image(b);
      xh = ((x.image(b).rowwise() - mu).array().rowwise() * inv_std_.array()).matrix();
      y.image(b) = ((xh.array().rowwise() * gamma_.value.row(0).array()).rowwise() +
                    beta_.value.row(0).array()).matrix();
    }
    return y;
  }

  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    const int c = grad.c;
    const Scalar count = static_cast<Scalar>(grad.n) * static_cast<Scalar>(grad.plane());
    RowVec<Scalar> sum_g = RowVec<Scalar>::Zero(c), sum_gx = RowVec<Scalar>::Zero(c);
    for (int b = 0; b < grad.n; ++b) {
      sum_g += grad.image(b).colwise().sum();
      sum_gx += grad.image(b).cwiseProduct(xhat_.image(b)).colwise().sum();
    }
    gamma_.grad.row(0) += sum_gx;
    beta_.grad.row(0) += sum_g;
    Tensor4<Scalar> dx = grad;
    const RowVec<Scalar> scale = gamma_.value.row(0).cwiseProduct(inv_std_) / count;
    for (int b = 0; b < grad.n; ++b) {
      auto d = dx.image(b);
      d = (((grad.image(b) * count).rowwise() - sum_g).array() -
           (xhat_.image(b).array().rowwise() * sum_gx.array())).matrix();
      d = (d.array().rowwise() * scale.array()).matrix();
    }
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) override {
    fn(prefix + "weight", gamma_);
    fn(prefix + "bias", beta_);
    fn(prefix + "running_mean", mean_);
    fn(prefix + "running_var", var_);
  }

 private:
  Param<Scalar> gamma_, beta_, mean_, var_;
  RowVec<Scalar> inv_std_;
  Tensor4<Scalar> xhat_;
};

template <typename Scalar>
class Sequential : public ModuleBase<Scalar, Sequential<Scalar>> {
 public:
  Sequential() = default;
  Sequential(const Sequential& o) {
    for (const auto& m : o.layers_) layers_.push_back(m->clone());
  }
  Sequential& operator=(const Sequential& o) {
    if (this != &o) {
      layers_.clear();
      for (const auto& m : o.layers_) layers_.push_back(m->clone());
    }
    return *this;
  }
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename Layer>
  Layer& add(Layer layer) {
    auto p = std::make_unique<Layer>(std::move(layer));
    Layer& ref = *p;
    layers_.push_back(std::move(p));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  Module<Scalar>& at(std::size_t i) { return *layers_.at(i); }

  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode mode) override {
    Tensor4<Scalar> h = x;
    for (auto& m : layers_) h = m->forward(h, mode);
    return h;
  }
  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    Tensor4<Scalar> g = grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }
  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) override {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i]->visit(prefix + std::to_string(i) + ".", fn);
    }
  }

 private:
  std::vector<std::unique_ptr<Module<Scalar>>> layers_;
};

/// conv3x3-BN-ReLU-conv3x3-BN plus identity or 1x1-conv-BN shortcut, then ReLU.
template <typename Scalar>
class BasicBlock : public ModuleBase<Scalar, BasicBlock<Scalar>> {
 public:
  BasicBlock(int in, int out, Rng& rng) {
    main_.add(Conv2d<Scalar>(ConvSpec{in, out, 3, 3, 1, 1, 1, 1, false}, rng));
    main_.add(BatchNorm2d<Scalar>(out));
    main_.add(Relu<Scalar>());
    main_.add(Conv2d<Scalar>(ConvSpec{out, out, 3, 3, 1, 1, 1, 1, false}, rng));
    main_.add(BatchNorm2d<Scalar>(out));
    if (in != out) {
      shortcut_.add(Conv2d<Scalar>(ConvSpec{in, out, 1, 1, 1, 1, 0, 0, false}, rng));
      shortcut_.add(BatchNorm2d<Scalar>(out));
    }
  }

  Tensor4<Scalar> forward(const Tensor4<Scalar>& x, Mode mode) override {
    Tensor4<Scalar> y = main_.forward(x, mode);
    if (shortcut_.size() > 0) {
      y.data += shortcut_.forward(x, mode).data;
    } else {
      y.data += x.data;
    }
    return relu_.forward(y, mode);
  }
  Tensor4<Scalar> backward(const Tensor4<Scalar>& grad) override {
    Tensor4<Scalar> g = relu_.backward(grad);
    Tensor4<Scalar> dx = main_.backward(g);
    if (shortcut_.size() > 0) {
      dx.data += shortcut_.backward(g).data;
    } else {
      dx.data += g.data;
    }
    return dx;
  }
  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) override {
    main_.visit(prefix + "main.", fn);
    shortcut_.visit(prefix + "shortcut.", fn);
  }

 private:
  Sequential<Scalar> main_;
  Sequential<Scalar> shortcut_;
  Relu<Scalar> relu_;
};

/// Fully connected layer on row-batched inputs: y = x W + b.
template <typename Scalar>
class Dense {
 public:
  Dense() = default;
  Dense(int in, int out, Rng& rng, bool bias = true) : weight_(in, out), has_bias_(bias) {
    he_normal(weight_.value, in, rng);
    if (has_bias_) bias_ = Param<Scalar>(1, out);
  }

  int in() const { return static_cast<int>(weight_.value.rows()); }
  int out() const { return static_cast<int>(weight_.value.cols()); }
  Param<Scalar>& weight() { return weight_; }
  Param<Scalar>& bias() { return bias_; }

  Mat<Scalar> forward(const Mat<Scalar>& x) {
    input_ = x;
    return apply(x);
  }
  Mat<Scalar> apply(const Mat<Scalar>& x) const {
    if (x.cols() != weight_.value.rows()) {
      throw ShapeError("dense expects " + std::to_string(weight_.value.rows()) + " inputs, got " +
                       std::to_string(x.cols()));
    }
    Mat<Scalar> y = x * weight_.value;
    if (has_bias_) y.rowwise() += bias_.value.row(0);
    return y;
  }
  Mat<Scalar> backward(const Mat<Scalar>& grad) {
    weight_.grad.noalias() += input_.transpose() * grad;
    if (has_bias_) bias_.grad.row(0) += grad.colwise().sum();
    return grad * weight_.value.transpose();
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    fn(prefix + "weight", weight_);
    if (has_bias_) fn(prefix + "bias", bias_);
  }

 private:
  Param<Scalar> weight_;
  Param<Scalar> bias_;
  bool has_bias_ = true;
  Mat<Scalar> input_;
};

}  // namespace strfew::nn
