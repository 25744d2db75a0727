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

#include <optional>
#include <string>
#include <vector>

#include "strfew/model/attention.hpp"
#include "strfew/model/config.hpp"
#include "strfew/model/heads.hpp"

namespace strfew {

/// Argmax path, adjacent repeats collapsed, blanks removed. Returns
/// recognizable-character indices.
template <typename Derived>
std::vector<int> ctc_greedy_path(const Eigen::MatrixBase<Derived>& logits) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    Eigen::Index arg;
    logits.row(t).maxCoeff(&arg);
    const int cls = static_cast<int>(arg);
    if (cls != prev && cls != CtcClasses::kBlank) out.push_back(cls - CtcClasses::kOffset);
    prev = cls;
  }
  return out;
}

template <typename Derived>
std::string decode_ctc_greedy(const Eigen::MatrixBase<Derived>& logits, const Charset& charset) {
  return charset.decode(ctc_greedy_path(logits));
}

/// Product of per-step maximum softmax probabilities.
template <typename Scalar>
double sequence_confidence(const nn::Mat<Scalar>& logits) {
  if (logits.rows() == 0) return 0.0;
  const nn::Mat<double> p = nn::softmax_rows(logits.template cast<double>().eval());
  double c = 1.0;
  for (Eigen::Index t = 0; t < p.rows(); ++t) c *= p.row(t).maxCoeff();
  return c;
}

struct Prediction {
  std::string text;
  double confidence = 0.0;
  /// Output classes in the predictor's own layout (end token excluded).
  std::vector<int> classes;
};

template <typename Scalar>
struct StageOutputs {
  nn::Tensor4<Scalar> rectified;
  nn::SeqBatch<Scalar> features;
  nn::SeqBatch<Scalar> context;
  nn::SeqBatch<Scalar> logits;
};

/// Encodes labels into predictor class ids (no start or end tokens for the
/// attention layout; the decoder appends the end token itself).
std::vector<int> encode_classes(const std::string& label, const Charset& cs, Predictor p);

/// Four-stage recognizer: optional TPS rectification, convolutional
/// features, optional BiLSTM context, CTC or attention prediction.
template <typename Scalar>
class StrModel {
 public:
  StrModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), charset_(cfg.make_charset()) {
    cfg_.validate();
    Rng rng(seed);
    if (cfg.transform == Transform::kTps) {
      nn::TpsConfig t = cfg.tps;
      t.out_h = nn::Backbone<Scalar>::kInputHeight;
      t.out_w = nn::Backbone<Scalar>::kInputWidth;
      tps_.emplace(t, 1, rng);
    }
    features_ = nn::Backbone<Scalar>(cfg.features, 1, rng, tps_.has_value());
    if (cfg.sequence == SequenceKind::kBiLstm) {
      sequence_.emplace(cfg.feature_dim(), cfg.hidden, cfg.sequence_layers, rng);
    }
    if (cfg.predictor == Predictor::kCtc) {
      ctc_.emplace(cfg.context_dim(), cfg.num_classes(), rng);
    } else {
      attention_.emplace(cfg.context_dim(), cfg.attention_hidden, cfg.num_classes(), rng);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const Charset& charset() const { return charset_; }
  const nn::Tps<Scalar>* tps() const { return tps_ ? &*tps_ : nullptr; }

  /// Training requires `targets` (predictor class ids) for attention models.
  StageOutputs<Scalar> forward(const nn::Tensor4<Scalar>& x, nn::Mode mode,
                               const std::vector<std::vector<int>>* targets = nullptr) {
    StageOutputs<Scalar> out;
    out.rectified = tps_ ? tps_->forward(x, mode) : x;
    out.features = features_.forward(out.rectified, mode);
    out.context = sequence_ ? sequence_->forward(out.features) : out.features;
    if (ctc_) {
      out.logits.steps = out.context.steps;
      out.logits.batch = out.context.batch;
      out.logits.data = ctc_->forward(out.context.data);
    } else {
      if (!targets) throw std::invalid_argument("attention forward needs teacher-forcing targets");
      out.logits = attention_->forward_train(out.context, *targets);
    }
    return out;
  }

  void backward(const nn::SeqBatch<Scalar>& dlogits) {
    nn::SeqBatch<Scalar> dctx;
    if (ctc_) {
      dctx.steps = dlogits.steps;
      dctx.batch = dlogits.batch;
      dctx.data = ctc_->backward(dlogits.data);
    } else {
      dctx = attention_->backward(dlogits);
    }
    const nn::SeqBatch<Scalar> dfeat = sequence_ ? sequence_->backward(dctx) : dctx;
    const nn::Tensor4<Scalar> drect = features_.backward(dfeat);
    if (tps_) tps_->backward(drect);
  }

  /// Greedy inference. Per-step logits are written to `step_logits` when
  /// given (T x C for CTC; taken steps x C for attention).
  std::vector<Prediction> predict(const nn::Tensor4<Scalar>& x, std::vector<nn::Mat<Scalar>>* step_logits = nullptr) {
    const nn::Tensor4<Scalar> rect = tps_ ? tps_->forward(x, nn::Mode::kInfer) : x;
    const nn::SeqBatch<Scalar> feat = features_.forward(rect, nn::Mode::kInfer);
    const nn::SeqBatch<Scalar> ctx = sequence_ ? sequence_->forward(feat) : feat;
    std::vector<Prediction> out(static_cast<std::size_t>(x.n));
    if (step_logits) step_logits->assign(static_cast<std::size_t>(x.n), nn::Mat<Scalar>());
    if (ctc_) {
      nn::SeqBatch<Scalar> logits;
      logits.steps = ctx.steps;
      logits.batch = ctx.batch;
      logits.data = ctc_->apply(ctx.data);
      for (int b = 0; b < x.n; ++b) {
        const nn::Mat<Scalar> l = logits.item(b);
        auto& p = out[static_cast<std::size_t>(b)];
        for (const int i : ctc_greedy_path(l)) p.classes.push_back(i + CtcClasses::kOffset);
        p.text = decode_ctc_greedy(l, charset_);
        p.confidence = sequence_confidence(l);
        if (step_logits) (*step_logits)[static_cast<std::size_t>(b)] = l;
      }
    } else {
      const auto dec = attention_->infer(ctx);
      for (int b = 0; b < x.n; ++b) {
        const auto& d = dec[static_cast<std::size_t>(b)];
        auto& p = out[static_cast<std::size_t>(b)];
        p.classes = d.classes;
        std::vector<int> chars;
        for (const int c : d.classes) chars.push_back(c - AttentionClasses::kOffset);
        p.text = charset_.decode(chars);
        p.confidence = sequence_confidence(d.logits);
        if (step_logits) (*step_logits)[static_cast<std::size_t>(b)] = d.logits;
      }
    }
    return out;
  }

  void visit(const nn::ParamVisitor<Scalar>& fn) {
    if (tps_) tps_->visit("transform.", fn);
    features_.visit("features.", fn);
    if (sequence_) sequence_->visit("sequence.", fn);
    if (ctc_) ctc_->visit("prediction.", fn);
    if (attention_) attention_->visit("prediction.", fn);
  }

  std::vector<nn::NamedParam<Scalar>> parameters() {
    std::vector<nn::NamedParam<Scalar>> out;
    visit([&](const std::string& name, nn::Param<Scalar>& p) { out.push_back({name, &p}); });
    return out;
  }

  void zero_grad() {
    visit([](const std::string&, nn::Param<Scalar>& p) { p.zero_grad(); });
  }

 private:
  ModelConfig cfg_;
  Charset charset_;
  std::optional<nn::Tps<Scalar>> tps_;
  nn::Backbone<Scalar> features_;
  std::optional<nn::SequenceEncoder<Scalar>> sequence_;
  std::optional<nn::Dense<Scalar>> ctc_;
  std::optional<nn::AttentionDecoder<Scalar>> attention_;
};

enum class PretextKind { kRotation, kContrast };

/// Backbone plus a pretext head. Backbone parameters share the recognizer's
/// "features." names so they transfer directly.
template <typename Scalar>
class PretextModel {
 public:
  PretextModel(const ModelConfig& cfg, PretextKind kind, std::uint64_t seed) : cfg_(cfg), kind_(kind) {
    Rng rng(seed);
    features_ = nn::Backbone<Scalar>(cfg.features, 1, rng);
    const int map_h = cfg.features == nn::BackboneKind::kMini ? 4 : 1;
    if (kind == PretextKind::kRotation) {
      rotation_ = nn::RotationHead<Scalar>(cfg.feature_dim(), map_h, cfg.rotation_hidden, rng);
    } else {
      contrast_ = nn::ContrastHead<Scalar>(cfg.feature_dim(), cfg.embedding_dim, rng);
    }
  }

  PretextKind kind() const { return kind_; }
  const ModelConfig& config() const { return cfg_; }

  /// Rotation scores (N x 4) or unit embeddings (N x dim).
  nn::Mat<Scalar> forward(const nn::Tensor4<Scalar>& x, nn::Mode mode) {
    const nn::Tensor4<Scalar> map = features_.forward_map(x, mode);
    return kind_ == PretextKind::kRotation ? rotation_.forward(map) : contrast_.forward(map);
  }

  void backward(const nn::Mat<Scalar>& grad) {
    (void)features_.backward_map(kind_ == PretextKind::kRotation ? rotation_.backward(grad) : contrast_.backward(grad));
  }

  void visit(const nn::ParamVisitor<Scalar>& fn) {
    features_.visit("features.", fn);
    if (kind_ == PretextKind::kRotation) rotation_.visit("head.", fn);
    else contrast_.visit("head.", fn);
  }
  void visit_backbone(const nn::ParamVisitor<Scalar>& fn) { features_.visit("features.", fn); }

  std::vector<nn::NamedParam<Scalar>> parameters() {
    std::vector<nn::NamedParam<Scalar>> out;
    visit([&](const std::string& name, nn::Param<Scalar>& p) { out.push_back({name, &p}); });
    return out;
  }
  void zero_grad() {
    visit([](const std::string&, nn::Param<Scalar>& p) { p.zero_grad(); });
  }

 private:
  ModelConfig cfg_;
  PretextKind kind_;
  nn::Backbone<Scalar> features_;
  nn::RotationHead<Scalar> rotation_;
  nn::ContrastHead<Scalar> contrast_;
};

}  // namespace strfew
