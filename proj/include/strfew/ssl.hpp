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

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "strfew/corpus/sample.hpp"
#include "strfew/loss.hpp"
#include "strfew/model/input.hpp"
#include "strfew/model/model.hpp"

namespace strfew {

/// theta' <- m * theta' + (1 - m) * theta, parameter by parameter. Names
/// and shapes must agree.
template <typename Scalar>
void ema_update(const std::vector<nn::NamedParam<Scalar>>& teacher,
                const std::vector<nn::NamedParam<Scalar>>& student, double momentum) {
  if (teacher.size() != student.size()) throw std::invalid_argument("ema: parameter count mismatch");
  const Scalar m = static_cast<Scalar>(momentum), rest = static_cast<Scalar>(1.0 - momentum);
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    auto& t = teacher[i].param->value;
    const auto& s = student[i].param->value;
    if (teacher[i].name != student[i].name || t.rows() != s.rows() || t.cols() != s.cols()) {
      throw std::invalid_argument("ema: parameter " + teacher[i].name + " does not match " + student[i].name);
    }
    t = m * t + rest * s;
  }
}

/// Moving-average copy of a model.
template <typename Model>
struct TeacherState {
  Model model;
  double momentum = 0.999;

  TeacherState(const Model& student, double m) : model(student), momentum(m) {
    if (m < 0.0 || m > 1.0) throw std::invalid_argument("momentum must lie in [0, 1]");
  }

  void update(Model& student) { ema_update(model.parameters(), student.parameters(), momentum); }
};

/// Fixed-capacity FIFO of key vectors.
template <typename Scalar>
class NegativeQueue {
 public:
  NegativeQueue(int capacity, int dim) : store_(capacity, dim) {
    if (capacity < 1 || dim < 1) throw std::invalid_argument("queue capacity and dimension must be positive");
  }

  int capacity() const { return static_cast<int>(store_.rows()); }
  int dim() const { return static_cast<int>(store_.cols()); }
  int size() const { return size_; }

  void enqueue(const nn::Mat<Scalar>& keys) {
    if (keys.cols() != store_.cols()) throw std::invalid_argument("queue: key dimension mismatch");
    for (Eigen::Index r = 0; r < keys.rows(); ++r) {
      store_.row(cursor_) = keys.row(r);
      cursor_ = (cursor_ + 1) % capacity();
      size_ = std::min(size_ + 1, capacity());
    }
  }

  /// Stored keys, oldest first.
  nn::Mat<Scalar> keys() const {
    nn::Mat<Scalar> out(size_, store_.cols());
    const int start = size_ < capacity() ? 0 : cursor_;
    for (int i = 0; i < size_; ++i) out.row(i) = store_.row((start + i) % capacity());
    return out;
  }

 private:
  nn::Mat<Scalar> store_;
  int cursor_ = 0;
  int size_ = 0;
};

/// Each input at 0, 90, 180 and 270 degrees counter-clockwise, image-major;
/// quarter turns are resized back to the input's dimensions.
std::pair<std::vector<Raster>, std::vector<int>> make_rotation_batch(const std::vector<Raster>& images);

struct PseudoLabelStats {
  long kept = 0;
  long dropped_empty = 0;
  long dropped_low_confidence = 0;
  /// Kept predictions by confidence decile, [0, 0.1) ... [0.9, 1].
  std::array<long, 10> histogram{};
};

/// Greedy predictions become pseudo-labels. Empty decodes and predictions
/// below `min_confidence` are dropped.
template <typename Scalar>
std::vector<PseudoLabeledSample> generate_pseudo_labels(StrModel<Scalar>& model,
                                                        const std::vector<UnlabeledSample>& unlabeled,
                                                        double min_confidence, PseudoLabelStats* stats = nullptr,
                                                        int batch_size = 64) {
  std::vector<PseudoLabeledSample> out;
  PseudoLabelStats st;
  for (std::size_t start = 0; start < unlabeled.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(unlabeled.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Raster> imgs;
    for (std::size_t i = start; i < end; ++i) imgs.push_back(unlabeled[i].image);
    const auto preds = model.predict(to_input<Scalar>(imgs));
    for (std::size_t i = start; i < end; ++i) {
      const Prediction& p = preds[i - start];
      if (p.text.empty()) {
        ++st.dropped_empty;
        continue;
      }
      if (p.confidence < min_confidence) {
        ++st.dropped_low_confidence;
        continue;
      }
      ++st.kept;
      ++st.histogram[static_cast<std::size_t>(std::clamp(static_cast<int>(p.confidence * 10.0), 0, 9))];
      out.push_back(PseudoLabeledSample{unlabeled[i], p.text, p.confidence});
    }
  }
  if (stats) *stats = st;
  return out;
}

template <typename Scalar>
nn::SeqBatch<Scalar> slice_batch(const nn::SeqBatch<Scalar>& x, int begin, int count) {
  nn::SeqBatch<Scalar> out(x.steps, count, static_cast<int>(x.dim()));
  for (int t = 0; t < x.steps; ++t) out.step(t) = x.step(t).middleRows(begin, count);
  return out;
}

template <typename Scalar>
void add_slice(nn::SeqBatch<Scalar>& dst, const nn::SeqBatch<Scalar>& src, int begin) {
  for (int t = 0; t < src.steps; ++t) dst.step(t).middleRows(begin, src.batch) += src.step(t);
}

struct MeanTeacherLoss {
  LossValue recognition;
  LossValue consistency;
  double total = 0.0;
};

/// One student/teacher evaluation over the concatenation [labeled;
/// unlabeled]. `student_view` and `teacher_view` are two independently
/// augmented renderings of the same images; the first `labels.size()` rows
/// are labeled. Accumulates student gradients; the caller applies the
/// optimizer and then updates the teacher.
template <typename Scalar>
MeanTeacherLoss mean_teacher_step(StrModel<Scalar>& student, StrModel<Scalar>& teacher,
                                  const nn::Tensor4<Scalar>& student_view, const nn::Tensor4<Scalar>& teacher_view,
                                  const std::vector<std::vector<int>>& labels, double alpha,
                                  long* infeasible = nullptr) {
  const int nl = static_cast<int>(labels.size());
  const int n = student_view.n;
  if (teacher_view.n != n || nl > n) throw std::invalid_argument("mean teacher: batch shape mismatch");
  const bool attention = student.config().predictor == Predictor::kAttention;
  std::vector<std::vector<int>> targets = labels;
  if (attention) {
    // Unlabeled rows are teacher-forced on the student's own greedy output so
    // both models score the same symbol sequence.
    nn::Tensor4<Scalar> u(n - nl, 1, student_view.h, student_view.w);
    u.data = student_view.data.tail(u.data.size());
    if (u.n > 0) {
      for (const auto& p : student.predict(u)) targets.push_back(p.classes);
    }
  }
  const auto* tp = attention ? &targets : nullptr;
  const StageOutputs<Scalar> s = student.forward(student_view, nn::Mode::kTrain, tp);
  // Both models normalise with batch statistics, so equal weights on equal
  // views agree exactly.
  const StageOutputs<Scalar> t = teacher.forward(teacher_view, nn::Mode::kTrain, tp);

  MeanTeacherLoss out;
  nn::SeqBatch<Scalar> grad(s.logits.steps, n, static_cast<int>(s.logits.dim()));
  if (nl > 0) {
    const nn::SeqBatch<Scalar> lab = slice_batch(s.logits, 0, nl);
    nn::SeqBatch<Scalar> g;
    out.recognition = attention ? attention_batch_loss(lab, labels, &g) : ctc_batch_loss(lab, labels, &g, infeasible);
    add_slice(grad, g, 0);
  }
  const nn::Mat<Scalar> ps = nn::softmax_rows(s.logits.data);
  const nn::Mat<Scalar> pt = nn::softmax_rows(t.logits.data);
  nn::Mat<Scalar> dp;
  out.consistency = consistency_mse(ps, pt, &dp);
  if (alpha != 0.0) grad.data += static_cast<Scalar>(alpha) * nn::softmax_rows_backward(ps, dp);
  out.total = out.recognition.value + alpha * out.consistency.value;
  student.backward(grad);
  return out;
}

/// One contrastive step. The key encoder is first moved toward the query
/// encoder, keys are computed without gradient, the query loss is
/// backpropagated into the query encoder, and the keys are enqueued.
template <typename Scalar>
LossValue moco_step(PretextModel<Scalar>& query, PretextModel<Scalar>& key, NegativeQueue<Scalar>& queue,
                    const nn::Tensor4<Scalar>& view_q, const nn::Tensor4<Scalar>& view_k, double tau, double m) {
  if (view_q.n > queue.capacity()) {
    throw std::invalid_argument("batch of " + std::to_string(view_q.n) + " exceeds queue capacity " +
                                std::to_string(queue.capacity()));
  }
  ema_update(key.parameters(), query.parameters(), m);
  const nn::Mat<Scalar> k = key.forward(view_k, nn::Mode::kTrain);
  const nn::Mat<Scalar> q = query.forward(view_q, nn::Mode::kTrain);
  nn::Mat<Scalar> dq;
  const LossValue loss = info_nce(q, k, queue.keys(), tau, &dq);
  query.backward(dq);
  queue.enqueue(k);
  return loss;
}

}  // namespace strfew
