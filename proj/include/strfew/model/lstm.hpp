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

#include <cmath>
#include <vector>

#include "strfew/model/layers.hpp"

namespace strfew::nn {

/// Gate pre-activations are laid out [input, forget, cell, output], each of
/// width hidden.
template <typename Scalar>
struct LstmWeights {
  Param<Scalar> wx, wh, b;

  LstmWeights() = default;
  LstmWeights(int in, int hidden, Rng& rng) : wx(in, 4 * hidden), wh(hidden, 4 * hidden), b(1, 4 * hidden) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    uniform_init(wx.value, bound, rng);
    uniform_init(wh.value, bound, rng);
    uniform_init(b.value, bound, rng);
  }

  int hidden() const { return static_cast<int>(wh.value.rows()); }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    fn(prefix + "wx", wx);
    fn(prefix + "wh", wh);
    fn(prefix + "b", b);
  }
};

/// Applies nonlinearities in place to gate pre-activations and returns the
/// new cell state.
template <typename Scalar>
Mat<Scalar> lstm_gates(Mat<Scalar>& gates, const Mat<Scalar>& c_prev, int hidden) {
  auto sig = [](Scalar v) { return sigmoid(v); };
  auto th = [](Scalar v) { return std::tanh(v); };
  gates.leftCols(2 * hidden) = gates.leftCols(2 * hidden).unaryExpr(sig);
  gates.middleCols(2 * hidden, hidden) = gates.middleCols(2 * hidden, hidden).unaryExpr(th);
  gates.rightCols(hidden) = gates.rightCols(hidden).unaryExpr(sig);
  return gates.leftCols(hidden).cwiseProduct(gates.middleCols(2 * hidden, hidden)) +
         gates.middleCols(hidden, hidden).cwiseProduct(c_prev);
}

/// Backward through one cell step. `gates` holds post-activation values.
/// Returns dL/d(pre-activation gates) and writes dL/dc_prev.
template <typename Scalar>
Mat<Scalar> lstm_gates_backward(const Mat<Scalar>& gates, const Mat<Scalar>& c_prev, const Mat<Scalar>& c,
                                const Mat<Scalar>& dh, const Mat<Scalar>& dc_in, int hidden, Mat<Scalar>& dc_prev) {
  const auto i = gates.leftCols(hidden).array();
  const auto f = gates.middleCols(hidden, hidden).array();
  const auto g = gates.middleCols(2 * hidden, hidden).array();
  const auto o = gates.rightCols(hidden).array();
  const Mat<Scalar> tc = c.array().tanh().matrix();
  Mat<Scalar> dc = dc_in + (dh.array() * o * (Scalar(1) - tc.array().square())).matrix();
  Mat<Scalar> dgates(gates.rows(), 4 * hidden);
  dgates.leftCols(hidden) = (dc.array() * g * i * (Scalar(1) - i)).matrix();
  dgates.middleCols(hidden, hidden) = (dc.array() * c_prev.array() * f * (Scalar(1) - f)).matrix();
  dgates.middleCols(2 * hidden, hidden) = (dc.array() * i * (Scalar(1) - g.square())).matrix();
  dgates.rightCols(hidden) = (dh.array() * tc.array() * o * (Scalar(1) - o)).matrix();
  dc_prev = (dc.array() * f).matrix();
  return dgates;
}

/// Single-direction LSTM over a time-major batch. With `reverse` set the
/// sequence is consumed from the last step to the first.
template <typename Scalar>
class Lstm {
 public:
  Lstm() = default;
  Lstm(int in, int hidden, bool reverse, Rng& rng) : w_(in, hidden, rng), reverse_(reverse) {}

  int hidden() const { return w_.hidden(); }

  SeqBatch<Scalar> forward(const SeqBatch<Scalar>& x) {
    const int hsz = hidden(), T = x.steps, B = x.batch;
    x_ = x;
    gates_.assign(static_cast<std::size_t>(T), Mat<Scalar>());
    cells_.assign(static_cast<std::size_t>(T), Mat<Scalar>());
    SeqBatch<Scalar> h(T, B, hsz);
    Mat<Scalar> xw = x.data * w_.wx.value;
    xw.rowwise() += w_.b.value.row(0);
    Mat<Scalar> hp = Mat<Scalar>::Zero(B, hsz), cp = Mat<Scalar>::Zero(B, hsz);
    for (int k = 0; k < T; ++k) {
      const int t = reverse_ ? T - 1 - k : k;
      Mat<Scalar> g = xw.middleRows(static_cast<Eigen::Index>(t) * B, B);
      g.noalias() += hp * w_.wh.value;
      Mat<Scalar> c = lstm_gates(g, cp, hsz);
      hp = (g.rightCols(hsz).array() * c.array().tanh()).matrix();
      h.step(t) = hp;
      gates_[static_cast<std::size_t>(t)] = std::move(g);
      cells_[static_cast<std::size_t>(t)] = c;
      cp = std::move(c);
    }
    h_ = h;
    return h;
  }

  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& grad) {
    const int hsz = hidden(), T = grad.steps, B = grad.batch;
    Mat<Scalar> dpre(static_cast<Eigen::Index>(T) * B, 4 * hsz);
    Mat<Scalar> dh_next = Mat<Scalar>::Zero(B, hsz), dc_next = Mat<Scalar>::Zero(B, hsz);
    const Mat<Scalar> zeros = Mat<Scalar>::Zero(B, hsz);
    for (int k = T - 1; k >= 0; --k) {
      const int t = reverse_ ? T - 1 - k : k;
      const int prev = reverse_ ? t + 1 : t - 1;
      const bool first = k == 0;
      const Mat<Scalar>& c_prev = first ? zeros : cells_[static_cast<std::size_t>(prev)];
      Mat<Scalar> dh = grad.step(t) + dh_next;
      Mat<Scalar> dc_prev;
      Mat<Scalar> dg = lstm_gates_backward<Scalar>(gates_[static_cast<std::size_t>(t)], c_prev,
                                                   cells_[static_cast<std::size_t>(t)], dh, dc_next, hsz, dc_prev);
      if (!first) {
        w_.wh.grad.noalias() += h_.step(prev).transpose() * dg;
      }
      dh_next = dg * w_.wh.value.transpose();
      dc_next = std::move(dc_prev);
      dpre.middleRows(static_cast<Eigen::Index>(t) * B, B) = dg;
    }
    w_.wx.grad.noalias() += x_.data.transpose() * dpre;
    w_.b.grad.row(0) += dpre.colwise().sum();
    SeqBatch<Scalar> dx(T, B, static_cast<int>(x_.dim()));
    dx.data.noalias() = dpre * w_.wx.value.transpose();
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) { w_.visit(prefix, fn); }

 private:
  LstmWeights<Scalar> w_;
  bool reverse_ = false;
  SeqBatch<Scalar> x_, h_;
  std::vector<Mat<Scalar>> gates_, cells_;
};

/// Bidirectional LSTM whose concatenated states are projected to `out` dims.
template <typename Scalar>
class BiLstmLayer {
 public:
  BiLstmLayer() = default;
  BiLstmLayer(int in, int hidden, int out, Rng& rng)
      : fwd_(in, hidden, false, rng), bwd_(in, hidden, true, rng), proj_(2 * hidden, out, rng) {}

  SeqBatch<Scalar> forward(const SeqBatch<Scalar>& x) {
    const SeqBatch<Scalar> a = fwd_.forward(x);
    const SeqBatch<Scalar> b = bwd_.forward(x);
    Mat<Scalar> cat(a.data.rows(), a.data.cols() + b.data.cols());
    cat << a.data, b.data;
    SeqBatch<Scalar> y;
    y.steps = x.steps;
    y.batch = x.batch;
    y.data = proj_.forward(cat);
    return y;
  }

  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& grad) {
    const Mat<Scalar> dcat = proj_.backward(grad.data);
    const int hsz = fwd_.hidden();
    SeqBatch<Scalar> ga, gb;
    ga.steps = gb.steps = grad.steps;
    ga.batch = gb.batch = grad.batch;
    ga.data = dcat.leftCols(hsz);
    gb.data = dcat.rightCols(hsz);
    SeqBatch<Scalar> dx = fwd_.backward(ga);
    dx.data += bwd_.backward(gb).data;
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    fwd_.visit(prefix + "fwd.", fn);
    bwd_.visit(prefix + "bwd.", fn);
    proj_.visit(prefix + "proj.", fn);
  }

 private:
  Lstm<Scalar> fwd_, bwd_;
  Dense<Scalar> proj_;
};

/// Stack of bidirectional layers; the first maps `in` to `hidden`, the rest
/// keep width `hidden`.
template <typename Scalar>
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(int in, int hidden, int layers, Rng& rng) {
    for (int l = 0; l < layers; ++l) layers_.emplace_back(l == 0 ? in : hidden, hidden, hidden, rng);
  }

  int num_layers() const { return static_cast<int>(layers_.size()); }

  SeqBatch<Scalar> forward(const SeqBatch<Scalar>& x) {
    if (x.steps < 1) throw ShapeError("sequence encoder needs at least one step");
    SeqBatch<Scalar> h = x;
    for (auto& l : layers_) h = l.forward(h);
    return h;
  }
  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& grad) {
    SeqBatch<Scalar> g = grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->backward(g);
    return g;
  }
  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].visit(prefix + std::to_string(i) + ".", fn);
  }

 private:
  std::vector<BiLstmLayer<Scalar>> layers_;
};

}  // namespace strfew::nn
