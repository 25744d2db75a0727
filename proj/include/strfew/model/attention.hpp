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
#include <stdexcept>
#include <vector>

#include "strfew/corpus/charset.hpp"
#include "strfew/model/lstm.hpp"

namespace strfew::nn {

/// Greedy decode result for one sample: emitted classes (end token
/// excluded) and the logits of every step taken, including the end step.
template <typename Scalar>
struct AttentionDecode {
  std::vector<int> classes;
  Mat<Scalar> logits;
};

/// Recurrent decoder with additive attention over the context sequence.
/// At each step the previous hidden state attends over context, and the
/// glimpse concatenated with a one-hot of the previous class drives an LSTM
/// cell whose new state is mapped to class scores.
template <typename Scalar>
class AttentionDecoder {
 public:
  AttentionDecoder() = default;
  AttentionDecoder(int context_dim, int hidden, int num_classes, Rng& rng)
      : hidden_(hidden), classes_(num_classes),
        i2h_(context_dim, hidden, rng, false),
        h2h_(hidden, hidden, rng, true),
        score_(hidden, 1, rng, false),
        cell_(context_dim + num_classes, hidden, rng),
        generator_(hidden, num_classes, rng) {}

  int num_classes() const { return classes_; }
  int hidden() const { return hidden_; }

  /// Teacher-forced pass. `targets` hold class ids without start or end
  /// tokens. Output has max_len + 1 steps; step s of sample b is scored
  /// against targets[b][s] or the end token at s == len.
  SeqBatch<Scalar> forward_train(const SeqBatch<Scalar>& context, const std::vector<std::vector<int>>& targets) {
    const int B = context.batch;
    if (static_cast<int>(targets.size()) != B) throw ShapeError("attention targets do not match batch size");
    std::size_t max_len = 0;
    for (const auto& t : targets) {
      if (t.size() > static_cast<std::size_t>(AttentionClasses::kMaxLength)) {
        throw std::invalid_argument("attention target longer than " + std::to_string(AttentionClasses::kMaxLength));
      }
      max_len = std::max(max_len, t.size());
    }
    const int steps = static_cast<int>(max_len) + 1;
    std::vector<int> prev(static_cast<std::size_t>(B), AttentionClasses::kSos);
    begin(context, steps);
    for (int s = 0; s < steps; ++s) {
      step(s, prev);
      for (int b = 0; b < B; ++b) {
        const auto& t = targets[static_cast<std::size_t>(b)];
        prev[static_cast<std::size_t>(b)] = s < static_cast<int>(t.size()) ? t[static_cast<std::size_t>(s)]
                                                                           : AttentionClasses::kEos;
      }
    }
    return finish(context.batch, steps);
  }

  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& grad) {
    const int B = grad.batch, steps = grad.steps, T = ctx_.steps, H = hidden_;
    const Eigen::Index D = ctx_.dim();
    const Mat<Scalar> dhs = generator_.backward(grad.data);
    Mat<Scalar> dproj = Mat<Scalar>::Zero(static_cast<Eigen::Index>(T) * B, H);
    SeqBatch<Scalar> dctx(T, B, static_cast<int>(D));
    Mat<Scalar> dh_next = Mat<Scalar>::Zero(B, H), dc_next = Mat<Scalar>::Zero(B, H);
    const Mat<Scalar> zeros = Mat<Scalar>::Zero(B, H);
    for (int s = steps - 1; s >= 0; --s) {
      const auto& st = cache_[static_cast<std::size_t>(s)];
      const Mat<Scalar>& c_prev = s == 0 ? zeros : cache_[static_cast<std::size_t>(s - 1)].c;
      const Mat<Scalar>& h_prev = s == 0 ? zeros : cache_[static_cast<std::size_t>(s - 1)].h;
      Mat<Scalar> dh = dhs.middleRows(static_cast<Eigen::Index>(s) * B, B) + dh_next;
      Mat<Scalar> dc_prev;
      const Mat<Scalar> dg = lstm_gates_backward<Scalar>(st.gates, c_prev, st.c, dh, dc_next, H, dc_prev);
      dc_next = std::move(dc_prev);
      cell_.wx.grad.topRows(D).noalias() += st.glimpse.transpose() * dg;
      for (int b = 0; b < B; ++b) {
        cell_.wx.grad.row(D + st.prev[static_cast<std::size_t>(b)]) += dg.row(b);
      }
      cell_.b.grad.row(0) += dg.colwise().sum();
      Mat<Scalar> dh_prev = Mat<Scalar>::Zero(B, H);
      if (s > 0) {
        cell_.wh.grad.noalias() += h_prev.transpose() * dg;
        dh_prev.noalias() += dg * cell_.wh.value.transpose();
      }
      const Mat<Scalar> dglimpse = dg * cell_.wx.value.topRows(D).transpose();
      // Glimpse = sum_t alpha_t * context_t.
      Mat<Scalar> dalpha(B, T);
      for (int t = 0; t < T; ++t) {
        const auto ct = ctx_.step(t);
        dalpha.col(t) = dglimpse.cwiseProduct(ct).rowwise().sum();
        dctx.step(t) += (dglimpse.array().colwise() * st.alpha.col(t).array()).matrix();
      }
      const Mat<Scalar> de = softmax_rows_backward<Scalar>(st.alpha, dalpha);
      Mat<Scalar> dhh = Mat<Scalar>::Zero(B, H);
      const auto& ws = score_.weight().value;
      for (int t = 0; t < T; ++t) {
        const auto e = st.energy.middleRows(static_cast<Eigen::Index>(t) * B, B);
        score_.weight().grad.noalias() += e.transpose() * de.col(t);
        Mat<Scalar> dpre = (de.col(t) * ws.transpose()).cwiseProduct(
            (Scalar(1) - e.array().square()).matrix());
        dproj.middleRows(static_cast<Eigen::Index>(t) * B, B) += dpre;
        dhh += dpre;
      }
      if (s > 0) {
        h2h_.weight().grad.noalias() += h_prev.transpose() * dhh;
        dh_prev.noalias() += dhh * h2h_.weight().value.transpose();
      }
      h2h_.bias().grad.row(0) += dhh.colwise().sum();
      dh_next = std::move(dh_prev);
    }
    i2h_.weight().grad.noalias() += ctx_.data.transpose() * dproj;
    dctx.data.noalias() += dproj * i2h_.weight().value.transpose();
    return dctx;
  }

  /// Greedy decoding, one sample at a time, until the end token or
  /// `max_chars` emitted classes.
  std::vector<AttentionDecode<Scalar>> infer(const SeqBatch<Scalar>& context, int max_chars = AttentionClasses::kMaxLength) {
    const int B = context.batch;
    std::vector<AttentionDecode<Scalar>> out(static_cast<std::size_t>(B));
    std::vector<int> prev(static_cast<std::size_t>(B), AttentionClasses::kSos);
    std::vector<bool> done(static_cast<std::size_t>(B), false);
    std::vector<std::vector<RowVec<Scalar>>> rows(static_cast<std::size_t>(B));
    begin(context, max_chars + 1);
    for (int s = 0; s <= max_chars; ++s) {
      step(s, prev);
      const Mat<Scalar> logits = generator_.apply(cache_[static_cast<std::size_t>(s)].h);
      bool all_done = true;
      for (int b = 0; b < B; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        if (done[bi]) continue;
        rows[bi].push_back(logits.row(b));
        Eigen::Index arg;
        logits.row(b).tail(classes_ - 1).maxCoeff(&arg);
        const int cls = static_cast<int>(arg) + 1;  // the start token is never emitted
        if (cls == AttentionClasses::kEos || s == max_chars) {
          done[bi] = true;
        } else {
          out[bi].classes.push_back(cls);
          all_done = false;
        }
        prev[bi] = cls;
      }
      if (all_done) break;
    }
    for (int b = 0; b < B; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      auto& res = out[bi];
      res.logits.resize(static_cast<Eigen::Index>(rows[bi].size()), classes_);
      for (std::size_t r = 0; r < rows[bi].size(); ++r) res.logits.row(static_cast<Eigen::Index>(r)) = rows[bi][r];
    }
    return out;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& fn) {
    i2h_.visit(prefix + "i2h.", fn);
    h2h_.visit(prefix + "h2h.", fn);
    score_.visit(prefix + "score.", fn);
    cell_.visit(prefix + "cell.", fn);
    generator_.visit(prefix + "generator.", fn);
  }

 private:
  struct StepCache {
    std::vector<int> prev;
    Mat<Scalar> energy;   // (T*B) x H, tanh outputs
    Mat<Scalar> alpha;    // B x T
    Mat<Scalar> glimpse;  // B x D
    Mat<Scalar> gates;    // B x 4H, post-activation
    Mat<Scalar> c, h;     // B x H
  };

  void begin(const SeqBatch<Scalar>& context, int steps) {
    ctx_ = context;
    proj_ = context.data * i2h_.weight().value;
    cache_.clear();
    cache_.reserve(static_cast<std::size_t>(steps));
  }

  void step(int s, const std::vector<int>& prev) {
    const int B = ctx_.batch, T = ctx_.steps, H = hidden_;
    const Eigen::Index D = ctx_.dim();
    const Mat<Scalar> zeros = Mat<Scalar>::Zero(B, H);
    const Mat<Scalar>& h_prev = s == 0 ? zeros : cache_.back().h;
    const Mat<Scalar>& c_prev = s == 0 ? zeros : cache_.back().c;
    StepCache st;
    st.prev = prev;
    Mat<Scalar> hh = h_prev * h2h_.weight().value;
    hh.rowwise() += h2h_.bias().value.row(0);
    st.energy.resize(static_cast<Eigen::Index>(T) * B, H);
    Mat<Scalar> scores(B, T);
    for (int t = 0; t < T; ++t) {
      auto e = st.energy.middleRows(static_cast<Eigen::Index>(t) * B, B);
      e = (proj_.middleRows(static_cast<Eigen::Index>(t) * B, B) + hh).array().tanh().matrix();
      scores.col(t) = e * score_.weight().value;
    }
    st.alpha = softmax_rows(scores);
    st.glimpse = Mat<Scalar>::Zero(B, D);
    for (int t = 0; t < T; ++t) {
      st.glimpse += (ctx_.step(t).array().colwise() * st.alpha.col(t).array()).matrix();
    }
    st.gates = st.glimpse * cell_.wx.value.topRows(D);
    st.gates.noalias() += h_prev * cell_.wh.value;
    st.gates.rowwise() += cell_.b.value.row(0);
    for (int b = 0; b < B; ++b) st.gates.row(b) += cell_.wx.value.row(D + prev[static_cast<std::size_t>(b)]);
    st.c = lstm_gates(st.gates, c_prev, H);
    st.h = (st.gates.rightCols(H).array() * st.c.array().tanh()).matrix();
    cache_.push_back(std::move(st));
  }

  SeqBatch<Scalar> finish(int B, int steps) {
    Mat<Scalar> hs(static_cast<Eigen::Index>(steps) * B, hidden_);
    for (int s = 0; s < steps; ++s) hs.middleRows(static_cast<Eigen::Index>(s) * B, B) = cache_[static_cast<std::size_t>(s)].h;
    SeqBatch<Scalar> logits;
    logits.steps = steps;
    logits.batch = B;
    logits.data = generator_.forward(hs);
    return logits;
  }

  int hidden_ = 0;
  int classes_ = 0;
  Dense<Scalar> i2h_, h2h_, score_;
  LstmWeights<Scalar> cell_;
  Dense<Scalar> generator_;
  SeqBatch<Scalar> ctx_;
  Mat<Scalar> proj_;
  std::vector<StepCache> cache_;
};

}  // namespace strfew::nn
