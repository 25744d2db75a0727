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
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "strfew/corpus/charset.hpp"
#include "strfew/model/tensor.hpp"

namespace strfew {

/// Loss in natural-log units. `feasible` is false only for CTC targets that
/// no alignment can produce; `value` is then +inf.
struct LossValue {
  double value = 0.0;
  long count = 0;
  bool feasible = true;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace detail

/// Frames needed to emit `label`: its length plus one separator per pair of
/// equal adjacent symbols.
inline int ctc_min_frames(const std::vector<int>& label) {
  int n = static_cast<int>(label.size());
  for (std::size_t i = 1; i < label.size(); ++i) n += label[i] == label[i - 1];
  return n;
}

/// Negative log-likelihood of `label` (class ids, blank = 0 excluded) under
/// per-frame scores `logits` (T x C, unnormalised log domain), summed over
/// every alignment. When `grad` is given it receives dL/dlogits.
template <typename Scalar>
LossValue ctc_nll(const nn::Mat<Scalar>& logits, const std::vector<int>& label, nn::Mat<Scalar>* grad = nullptr) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const int T = static_cast<int>(logits.rows());
  const int C = static_cast<int>(logits.cols());
  for (const int k : label) {
    if (k <= CtcClasses::kBlank || k >= C) throw std::invalid_argument("ctc label class out of range");
  }
  if (grad) grad->setZero(T, C);
  LossValue out;
  out.count = 1;
  if (T < ctc_min_frames(label)) {
    out.feasible = false;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const nn::Mat<double> logp = nn::log_softmax_rows(logits.template cast<double>().eval());
  const int L = 2 * static_cast<int>(label.size()) + 1;
  auto sym = [&](int s) { return s % 2 == 0 ? CtcClasses::kBlank : label[static_cast<std::size_t>(s / 2)]; };
  auto can_skip = [&](int s) { return s % 2 == 1 && s >= 2 && sym(s) != sym(s - 2); };

  nn::Mat<double> alpha = nn::Mat<double>::Constant(T, L, kNegInf);
  alpha(0, 0) = logp(0, CtcClasses::kBlank);
  if (L > 1) alpha(0, 1) = logp(0, sym(1));
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < L; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = detail::log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = detail::log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + logp(t, sym(s));
    }
  }
  double log_total = alpha(T - 1, L - 1);
  if (L > 1) log_total = detail::log_add(log_total, alpha(T - 1, L - 2));
  if (log_total == kNegInf) {
    out.feasible = false;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = -log_total;
  if (!grad) return out;

  // beta(t, s): log probability of completing the label from state s at t,
  // excluding the emission at t itself.
  nn::Mat<double> beta = nn::Mat<double>::Constant(T, L, kNegInf);
  beta(T - 1, L - 1) = 0.0;
  if (L > 1) beta(T - 1, L - 2) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < L; ++s) {
      double b = beta(t + 1, s) + logp(t + 1, sym(s));
      if (s + 1 < L) b = detail::log_add(b, beta(t + 1, s + 1) + logp(t + 1, sym(s + 1)));
      if (s + 2 < L && can_skip(s + 2)) b = detail::log_add(b, beta(t + 1, s + 2) + logp(t + 1, sym(s + 2)));
      beta(t, s) = b;
    }
  }
  for (int t = 0; t < T; ++t) {
    nn::RowVec<double> occ = nn::RowVec<double>::Constant(C, kNegInf);
    for (int s = 0; s < L; ++s) {
      const int k = sym(s);
      occ(k) = detail::log_add(occ(k), alpha(t, s) + beta(t, s));
    }
    for (int k = 0; k < C; ++k) {
      const double post = occ(k) == kNegInf ? 0.0 : std::exp(occ(k) - log_total);
      (*grad)(t, k) = static_cast<Scalar>(std::exp(logp(t, k)) - post);
    }
  }
  return out;
}

template <typename Scalar>
LossValue ctc_nll(const nn::Mat<Scalar>& logits, const std::string& label, const Charset& cs,
                  nn::Mat<Scalar>* grad = nullptr) {
  std::vector<int> ids = cs.encode(label);
  for (int& i : ids) i += CtcClasses::kOffset;
  return ctc_nll(logits, ids, grad);
}

class OracleTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Brute-force reference: sums the probability of every frame path that
/// collapses to `label`. Frame probabilities are T x C with blank at 0.
/// Refuses T > 8 or more than 5 non-blank classes.
LossValue ctc_oracle_nll(const nn::Mat<double>& frame_probs, const std::vector<int>& label);

/// Mean over positions of -log softmax(true class). `target` must already
/// include the end token.
template <typename Scalar>
LossValue attention_nll(const nn::Mat<Scalar>& step_logits, const std::vector<int>& target,
                        nn::Mat<Scalar>* grad = nullptr) {
  if (static_cast<std::size_t>(step_logits.rows()) != target.size()) {
    throw std::invalid_argument("attention loss: " + std::to_string(step_logits.rows()) + " steps for " +
                                std::to_string(target.size()) + " targets");
  }
  const nn::Mat<double> logp = nn::log_softmax_rows(step_logits.template cast<double>().eval());
  LossValue out;
  out.count = static_cast<long>(target.size());
  const double n = static_cast<double>(target.size());
  if (grad) *grad = logp.array().exp().matrix().template cast<Scalar>() / static_cast<Scalar>(n);
  for (std::size_t s = 0; s < target.size(); ++s) {
    const int k = target[s];
    if (k < 0 || k >= step_logits.cols()) throw std::invalid_argument("attention target class out of range");
    out.value -= logp(static_cast<Eigen::Index>(s), k);
    if (grad) (*grad)(static_cast<Eigen::Index>(s), k) -= static_cast<Scalar>(1.0 / n);
  }
  if (n > 0) out.value /= n;
  return out;
}

/// Mean squared difference over every element. Gradient is with respect to
/// the first argument.
template <typename Scalar>
LossValue consistency_mse(const nn::Mat<Scalar>& student, const nn::Mat<Scalar>& teacher,
                          nn::Mat<Scalar>* grad = nullptr) {
  if (student.rows() != teacher.rows() || student.cols() != teacher.cols()) {
    throw std::invalid_argument("consistency loss: shape mismatch");
  }
  LossValue out;
  out.count = static_cast<long>(student.size());
  if (student.size() == 0) return out;
  const nn::Mat<double> d = (student - teacher).template cast<double>();
  out.value = d.squaredNorm() / static_cast<double>(student.size());
  if (grad) *grad = (Scalar(2) / static_cast<Scalar>(student.size())) * (student - teacher);
  return out;
}

/// Mean cross-entropy of row logits against class labels.
template <typename Scalar>
LossValue cross_entropy(const nn::Mat<Scalar>& logits, const std::vector<int>& labels,
                        nn::Mat<Scalar>* grad = nullptr) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw std::invalid_argument("cross entropy: row/label count mismatch");
  }
  const nn::Mat<double> logp = nn::log_softmax_rows(logits.template cast<double>().eval());
  LossValue out;
  out.count = static_cast<long>(labels.size());
  const double n = static_cast<double>(labels.size());
  if (grad) *grad = logp.array().exp().matrix().template cast<Scalar>() / static_cast<Scalar>(n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int k = labels[i];
    if (k < 0 || k >= logits.cols()) throw std::invalid_argument("label " + std::to_string(k) + " out of range");
    out.value -= logp(static_cast<Eigen::Index>(i), k);
    if (grad) (*grad)(static_cast<Eigen::Index>(i), k) -= static_cast<Scalar>(1.0 / n);
  }
  if (n > 0) out.value /= n;
  return out;
}

/// Four-way rotation loss; labels index (0, 90, 180, 270) degrees.
template <typename Scalar>
LossValue rotation_nll(const nn::Mat<Scalar>& logits, const std::vector<int>& rotations,
                       nn::Mat<Scalar>* grad = nullptr) {
  if (logits.cols() != 4) throw std::invalid_argument("rotation loss expects 4 classes");
  for (const int r : rotations) {
    if (r < 0 || r > 3) throw std::invalid_argument("rotation label " + std::to_string(r) + " out of range");
  }
  return cross_entropy(logits, rotations, grad);
}

/// Contrastive loss over a batch: row i of `q` is scored against row i of
/// `k` (positive) and every row of `negatives`, all unit norm. Mean over
/// rows. Gradient is with respect to `q`; keys receive none.
template <typename Scalar>
LossValue info_nce(const nn::Mat<Scalar>& q, const nn::Mat<Scalar>& k, const nn::Mat<Scalar>& negatives, double tau,
                   nn::Mat<Scalar>* grad = nullptr) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (q.rows() != k.rows() || q.cols() != k.cols()) throw std::invalid_argument("info_nce: q/k shape mismatch");
  if (negatives.rows() > 0 && negatives.cols() != q.cols()) {
    throw std::invalid_argument("info_nce: negative dimension mismatch");
  }
  const Eigen::Index n = q.rows(), kq = negatives.rows();
  const nn::Mat<double> qd = q.template cast<double>(), kd = k.template cast<double>();
  const nn::Mat<double> nd = negatives.template cast<double>();
  nn::Mat<double> logits(n, kq + 1);
  logits.col(0) = qd.cwiseProduct(kd).rowwise().sum() / tau;
  if (kq > 0) logits.rightCols(kq) = qd * nd.transpose() / tau;
  const nn::Mat<double> logp = nn::log_softmax_rows(logits);
  LossValue out;
  out.count = static_cast<long>(n);
  if (n == 0) return out;
  out.value = -logp.col(0).mean();
  if (grad) {
    nn::Mat<double> p = logp.array().exp();
    p.col(0).array() -= 1.0;
    nn::Mat<double> g = p.col(0).asDiagonal() * kd;
    if (kq > 0) g += p.rightCols(kq) * nd;
    *grad = (g / (tau * static_cast<double>(n))).template cast<Scalar>();
  }
  return out;
}

/// Mean CTC loss over a time-major batch. Infeasible samples are skipped
/// and counted in `infeasible`; the mean is over the remaining samples.
template <typename Scalar>
LossValue ctc_batch_loss(const nn::SeqBatch<Scalar>& logits, const std::vector<std::vector<int>>& labels,
                         nn::SeqBatch<Scalar>* grad, long* infeasible = nullptr) {
  const int B = logits.batch;
  if (static_cast<int>(labels.size()) != B) throw std::invalid_argument("ctc batch: label count mismatch");
  std::vector<nn::Mat<Scalar>> grads(static_cast<std::size_t>(B));
  LossValue out;
  std::vector<bool> ok(static_cast<std::size_t>(B), false);
  for (int b = 0; b < B; ++b) {
    const LossValue l = ctc_nll(logits.item(b), labels[static_cast<std::size_t>(b)],
                                grad ? &grads[static_cast<std::size_t>(b)] : nullptr);
    if (!l.feasible) {
      if (infeasible) ++*infeasible;
      continue;
    }
    ok[static_cast<std::size_t>(b)] = true;
    out.value += l.value;
    ++out.count;
  }
  if (out.count > 0) out.value /= static_cast<double>(out.count);
  if (grad) {
    *grad = nn::SeqBatch<Scalar>(logits.steps, B, static_cast<int>(logits.dim()));
    const Scalar scale = out.count > 0 ? Scalar(1) / static_cast<Scalar>(out.count) : Scalar(0);
    for (int b = 0; b < B; ++b) {
      if (ok[static_cast<std::size_t>(b)]) grad->set_item(b, grads[static_cast<std::size_t>(b)] * scale);
    }
  }
  return out;
}

/// Mean over samples of the per-sample attention loss. `targets` hold class
/// ids without the end token; steps past a sample's end token are ignored.
template <typename Scalar>
LossValue attention_batch_loss(const nn::SeqBatch<Scalar>& logits, const std::vector<std::vector<int>>& targets,
                               nn::SeqBatch<Scalar>* grad) {
  const int B = logits.batch;
  if (static_cast<int>(targets.size()) != B) throw std::invalid_argument("attention batch: target count mismatch");
  if (grad) *grad = nn::SeqBatch<Scalar>(logits.steps, B, static_cast<int>(logits.dim()));
  LossValue out;
  for (int b = 0; b < B; ++b) {
    std::vector<int> t = targets[static_cast<std::size_t>(b)];
    t.push_back(AttentionClasses::kEos);
    const int n = static_cast<int>(t.size());
    if (n > logits.steps) throw std::invalid_argument("attention batch: target longer than decoded steps");
    nn::Mat<Scalar> l(n, logits.dim());
    for (int s = 0; s < n; ++s) l.row(s) = logits.data.row(static_cast<Eigen::Index>(s) * B + b);
    nn::Mat<Scalar> g;
    const LossValue v = attention_nll(l, t, grad ? &g : nullptr);
    out.value += v.value;
    ++out.count;
    if (grad) {
      for (int s = 0; s < n; ++s) grad->data.row(static_cast<Eigen::Index>(s) * B + b) = g.row(s) / static_cast<Scalar>(B);
    }
  }
  if (B > 0) out.value /= B;
  return out;
}

}  // namespace strfew
