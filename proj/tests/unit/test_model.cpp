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

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "strfew/model/attention.hpp"
#include "strfew/model/backbone.hpp"
#include "strfew/model/checkpoint.hpp"
#include "strfew/model/config.hpp"
#include "strfew/model/heads.hpp"
#include "strfew/model/input.hpp"
#include "strfew/model/layers.hpp"
#include "strfew/model/lstm.hpp"
#include "strfew/model/model.hpp"
#include "strfew/model/tps.hpp"
#include "support/testing.hpp"

using namespace strfew;
using namespace strfew::nn;
using strfew::testing::numeric_grad;
using strfew::testing::random_mat;
using strfew::testing::rel_error;
using strfew::testing::TempDir;

namespace {

Tensor4<double> random_tensor(Rng& rng, int n, int c, int h, int w) {
  Tensor4<double> t(n, c, h, w);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = rng.normal();
  return t;
}

double dot(const Tensor4<double>& a, const Tensor4<double>& r) { return a.data.dot(r.data); }

/// Checks input and parameter gradients of a Tensor4 -> Tensor4 module
/// against finite differences of sum(forward(x) * R).
void check_module(Module<double>& m, Tensor4<double> x, Rng& rng, bool input_grad = true, double tol = 1e-5) {
  const Tensor4<double> y = m.forward(x, Mode::kTrain);
  Tensor4<double> r(y.n, y.c, y.h, y.w);
  for (Eigen::Index i = 0; i < r.data.size(); ++i) r.data[i] = rng.normal();
  m.visit("", [](const std::string&, Param<double>& p) { p.zero_grad(); });
  m.forward(x, Mode::kTrain);
  const Tensor4<double> dx = m.backward(r);
  auto loss = [&] { return dot(m.forward(x, Mode::kTrain), r); };
  if (input_grad) {
    Mat<double> xm = Eigen::Map<Mat<double>>(x.data.data(), x.data.size(), 1);
    const Mat<double> num = numeric_grad(xm, [&] {
      x.data = Eigen::Map<Eigen::VectorXd>(xm.data(), xm.size());
      return loss();
    });
    x.data = Eigen::Map<Eigen::VectorXd>(xm.data(), xm.size());
    const Mat<double> ana = Eigen::Map<const Mat<double>>(dx.data.data(), dx.data.size(), 1);
    CHECK(rel_error(ana, num) < tol);
  }
  m.visit("", [&](const std::string& name, Param<double>& p) {
    if (!p.trainable) return;
    const Mat<double> ana = p.grad;
    const Mat<double> num = numeric_grad(p.value, loss);
    INFO(name);
    CHECK(rel_error(ana, num) < tol);
  });
}

SeqBatch<double> random_seq(Rng& rng, int t, int b, int d) {
  SeqBatch<double> s(t, b, d);
  s.data = random_mat(rng, s.data.rows(), s.data.cols());
  return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("conv gradients with stride and padding") {
  Rng rng(1);
  Conv2d<double> conv(ConvSpec{2, 3, 3, 2, 2, 1, 1, 0, true}, rng);
  check_module(conv, random_tensor(rng, 2, 2, 5, 6), rng);
}

TEST_CASE("conv output size") {
  Rng rng(1);
  Conv2d<double> conv(ConvSpec{1, 4, 3, 3, 1, 1, 1, 1, false}, rng);
  const auto y = conv.forward(Tensor4<double>(2, 1, 32, 100), Mode::kInfer);
  CHECK(y.n == 2);
  CHECK(y.c == 4);
  CHECK(y.h == 32);
  CHECK(y.w == 100);
}

TEST_CASE("max pool with asymmetric stride and padding") {
  Rng rng(2);
  MaxPool2d<double> pool(PoolSpec{2, 2, 2, 1, 0, 1});
  const auto x = random_tensor(rng, 2, 2, 4, 5);
  const auto y = pool.forward(x, Mode::kTrain);
  CHECK(y.h == 2);
  CHECK(y.w == 6);
  check_module(pool, x, rng);
}

TEST_CASE("batch norm gradients and running statistics") {
  Rng rng(3);
  BatchNorm2d<double> bn(3);
  bn.visit("", [&](const std::string& name, Param<double>& p) {
    if (p.trainable) p.value = random_mat(rng, p.value.rows(), p.value.cols());
  });
  check_module(bn, random_tensor(rng, 3, 3, 2, 4), rng);

  BatchNorm2d<double> fresh(1);
  Tensor4<double> x(4, 1, 1, 1);
  x.data << 1, 2, 3, 4;
  fresh.forward(x, Mode::kTrain);
  fresh.visit("", [](const std::string& name, Param<double>& p) {
    if (name == "running_mean") CHECK(p.value(0, 0) == doctest::Approx(0.25));
    if (name == "running_var") CHECK(p.value(0, 0) == doctest::Approx(0.9 + 0.1 * (5.0 / 3.0)));
    if (name.rfind("running", 0) == 0) CHECK_FALSE(p.trainable);
  });
  const auto y = fresh.forward(x, Mode::kInfer);
  CHECK(y.data[0] == doctest::Approx((1.0 - 0.25) / std::sqrt(0.9 + 0.1 * (5.0 / 3.0) + 1e-5)));
}

TEST_CASE("residual block gradients") {
  Rng rng(4);
  BasicBlock<double> block(2, 3, rng);
  check_module(block, random_tensor(rng, 2, 2, 3, 4), rng, true, 1e-4);
}

TEST_CASE("global average pool") {
  Rng rng(5);
  GlobalAvgPool<double> gap;
  const auto x = random_tensor(rng, 2, 3, 2, 3);
  const auto y = gap.forward(x, Mode::kTrain);
  CHECK(y.h == 1);
  double mean = 0;
  for (int yy = 0; yy < 2; ++yy) {
    for (int xx = 0; xx < 3; ++xx) mean += x.at(1, 2, yy, xx) / 6.0;
  }
  CHECK(y.at(1, 2, 0, 0) == doctest::Approx(mean));
  check_module(gap, x, rng);
}

TEST_CASE("sequential copies are deep") {
  Rng rng(6);
  Sequential<double> a;
  a.add(Conv2d<double>(ConvSpec{1, 2, 1, 1, 1, 1, 0, 0, true}, rng));
  Sequential<double> b = a;
  b.visit("", [](const std::string&, Param<double>& p) { p.value.setConstant(7.0); });
  a.visit("", [](const std::string&, Param<double>& p) { CHECK(p.value(0, 0) != 7.0); });
}

TEST_CASE("BiLSTM stack gradients") {
  Rng rng(7);
  SequenceEncoder<double> enc(3, 4, 2, rng);
  SeqBatch<double> x = random_seq(rng, 5, 2, 3);
  const SeqBatch<double> y = enc.forward(x);
  CHECK(y.steps == 5);
  CHECK(y.dim() == 4);
  const Mat<double> r = random_mat(rng, y.data.rows(), y.data.cols());
  enc.visit("", [](const std::string&, Param<double>& p) { p.zero_grad(); });
  enc.forward(x);
  SeqBatch<double> g = y;
  g.data = r;
  const SeqBatch<double> dx = enc.backward(g);
  auto loss = [&] { return enc.forward(x).data.cwiseProduct(r).sum(); };
  CHECK(rel_error(dx.data, numeric_grad(x.data, loss)) < 1e-6);
  enc.visit("", [&](const std::string& name, Param<double>& p) {
    INFO(name);
    const Mat<double> ana = p.grad;
    CHECK(rel_error(ana, numeric_grad(p.value, loss)) < 1e-6);
  });
}

TEST_CASE("BiLSTM sees both directions") {
  Rng rng(8);
  SequenceEncoder<double> enc(2, 3, 1, rng);
  SeqBatch<double> x = random_seq(rng, 6, 1, 2);
  const Mat<double> base = enc.forward(x).step(0);
  x.step(5).setConstant(3.0);
  CHECK((enc.forward(x).step(0) - base).norm() > 1e-9);
}

TEST_CASE("attention decoder gradients under teacher forcing") {
  Rng rng(9);
  AttentionDecoder<double> dec(4, 5, 7, rng);
  SeqBatch<double> ctx = random_seq(rng, 6, 2, 4);
  const std::vector<std::vector<int>> targets{{2, 3}, {4}};
  const SeqBatch<double> y = dec.forward_train(ctx, targets);
  CHECK(y.steps == 3);
  CHECK(y.dim() == 7);
  const Mat<double> r = random_mat(rng, y.data.rows(), y.data.cols());
  dec.visit("", [](const std::string&, Param<double>& p) { p.zero_grad(); });
  dec.forward_train(ctx, targets);
  SeqBatch<double> g = y;
  g.data = r;
  const SeqBatch<double> dctx = dec.backward(g);
  auto loss = [&] { return dec.forward_train(ctx, targets).data.cwiseProduct(r).sum(); };
  CHECK(rel_error(dctx.data, numeric_grad(ctx.data, loss)) < 1e-6);
  dec.visit("", [&](const std::string& name, Param<double>& p) {
    INFO(name);
    const Mat<double> ana = p.grad;
    CHECK(rel_error(ana, numeric_grad(p.value, loss)) < 1e-6);
  });
}

TEST_CASE("attention inference stops at the length cap and never emits the start token") {
  Rng rng(10);
  AttentionDecoder<double> dec(4, 5, 7, rng);
  const SeqBatch<double> ctx = random_seq(rng, 6, 3, 4);
  const auto out = dec.infer(ctx, 4);
  REQUIRE(out.size() == 3);
  for (const auto& d : out) {
    CHECK(d.classes.size() <= 4);
    // One row per step taken, including the terminating step.
    CHECK(d.logits.rows() == static_cast<Eigen::Index>(d.classes.size()) + 1);
    for (int c : d.classes) {
      CHECK(c != AttentionClasses::kSos);
      CHECK(c != AttentionClasses::kEos);
    }
  }
  CHECK_THROWS(dec.forward_train(ctx, {std::vector<int>(26, 2), {2}, {2}}));
}

TEST_CASE("canonical fiducials give an identity warp") {
  Rng rng(11);
  const TpsGeometry geo(20, 4, 8);
  const auto img = random_tensor(rng, 1, 2, 4, 8);
  const Tensor4<double> out = tps_warp(img, {geo.canonical()}, geo);
  CHECK((out.data - img.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("TPS warp gradient on a 4x8 raster") {
  Rng rng(12);
  const TpsGeometry geo(20, 4, 8);
  const auto img = random_tensor(rng, 1, 1, 4, 8);
  Mat<double> fid = geo.canonical() * 0.8 + random_mat(rng, 20, 2, 0.05);
  Tensor4<double> r(1, 1, 4, 8);
  for (Eigen::Index i = 0; i < r.data.size(); ++i) r.data[i] = rng.normal();
  const Mat<double> grid = geo.a() * fid;
  const Mat<double> ana = geo.a().transpose() * grid_sample_backward(img, 0, grid, r);
  const Mat<double> num = numeric_grad(fid, [&] { return dot(tps_warp(img, {fid}, geo), r); }, 1e-7);
  CHECK(rel_error(ana, num) < 1e-3);
}

TEST_CASE("degenerate fiducials are detected") {
  CHECK(degenerate_fiducials(Mat<double>::Zero(20, 2).eval()));
  Mat<double> nan = canonical_fiducials(20);
  nan(3, 1) = std::nan("");
  CHECK(degenerate_fiducials(nan));
  CHECK_FALSE(degenerate_fiducials(canonical_fiducials(20)));
  CHECK_THROWS(canonical_fiducials(5));
}

TEST_CASE("backbones emit 26 steps") {
  Rng rng(13);
  for (auto kind : {BackboneKind::kMini, BackboneKind::kVgg7, BackboneKind::kResnet29}) {
    Backbone<float> b(kind, 1, rng);
    const SeqBatch<float> f = b.forward(Tensor4<float>(1, 1, 32, 100), Mode::kInfer);
    CHECK(f.steps == 26);
    CHECK(f.dim() == (kind == BackboneKind::kMini ? 64 : 512));
    const Tensor4<float> map = b.forward_map(Tensor4<float>(1, 1, 32, 100), Mode::kInfer);
    CHECK(map.h == (kind == BackboneKind::kMini ? 4 : 1));
  }
  Backbone<float> b(BackboneKind::kMini, 1, rng);
  CHECK_THROWS_AS(b.forward(Tensor4<float>(1, 1, 31, 100), Mode::kInfer), ShapeError);
  CHECK(parse_backbone("resnet") == BackboneKind::kResnet29);
  CHECK_THROWS(parse_backbone("alexnet"));
}

TEST_CASE("rotation head and contrast head") {
  Rng rng(14);
  RotationHead<double> rot(3, 2, 5, rng);
  const auto map = random_tensor(rng, 4, 3, 2, 6);
  CHECK(rot.forward(map).rows() == 4);
  CHECK(rot.forward(map).cols() == 4);
  ContrastHead<double> con(3, 8, rng);
  const Mat<double> e = con.forward(map);
  for (Eigen::Index r = 0; r < e.rows(); ++r) CHECK(e.row(r).norm() == doctest::Approx(1.0));
}

TEST_CASE("contrast head gradient") {
  Rng rng(15);
  ContrastHead<double> con(3, 4, rng);
  auto map = random_tensor(rng, 2, 3, 2, 3);
  const Mat<double> r = random_mat(rng, 2, 4);
  con.forward(map);
  const Tensor4<double> dmap = con.backward(r);
  Mat<double> xm = Eigen::Map<Mat<double>>(map.data.data(), map.data.size(), 1);
  const Mat<double> num = numeric_grad(xm, [&] {
    map.data = Eigen::Map<Eigen::VectorXd>(xm.data(), xm.size());
    return con.forward(map).cwiseProduct(r).sum();
  });
  const Mat<double> ana = Eigen::Map<const Mat<double>>(dmap.data.data(), dmap.data.size(), 1);
  CHECK(rel_error(ana, num) < 1e-6);
}

TEST_CASE("greedy CTC decode collapses repeats and drops blanks") {
  // Frames: a a _ a b b _ -> "aab" with a = class 1, b = class 2.
  const int path[] = {1, 1, 0, 1, 2, 2, 0};
  Mat<float> logits = Mat<float>::Zero(7, 4);
  for (int t = 0; t < 7; ++t) logits(t, path[t]) = 5.0f;
  const Charset cs("ab+", {});
  CHECK(decode_ctc_greedy(logits, cs) == "aab");
  CHECK(ctc_greedy_path(logits) == std::vector<int>{0, 0, 1});
}

TEST_CASE("sequence confidence is the product of frame maxima") {
  Mat<double> logits(2, 2);
  logits << 0.0, std::log(3.0), 0.0, 0.0;
  CHECK(sequence_confidence(logits) == doctest::Approx(0.75 * 0.5));
}

TEST_CASE("class encodings per predictor") {
  const Charset& cs = Charset::standard();
  const auto ctc = encode_classes("Ab", cs, Predictor::kCtc);
  CHECK(ctc == std::vector<int>{*cs.index_of('A') + 1, *cs.index_of('b') + 1});
  const auto att = encode_classes("Ab", cs, Predictor::kAttention);
  CHECK(att == std::vector<int>{*cs.index_of('A') + 2, *cs.index_of('b') + 2});
}

TEST_CASE("model config presets, text round-trip and digest") {
  const ModelConfig crnn = ModelConfig::crnn();
  CHECK(crnn.features == BackboneKind::kVgg7);
  CHECK(crnn.predictor == Predictor::kCtc);
  CHECK(crnn.transform == Transform::kNone);
  CHECK(crnn.num_classes() == 95);
  const ModelConfig trba = ModelConfig::trba();
  CHECK(trba.features == BackboneKind::kResnet29);
  CHECK(trba.transform == Transform::kTps);
  CHECK(trba.predictor == Predictor::kAttention);
  CHECK(trba.num_classes() == 96);
  const ModelConfig back = ModelConfig::from_text(trba.to_text());
  CHECK(back.digest() == trba.digest());
  CHECK(back.to_text() == trba.to_text());
  CHECK(crnn.digest() != trba.digest());
  ModelConfig c = crnn;
  c.apply({{"hidden", "128"}});
  CHECK(c.hidden == 128);
  CHECK_THROWS(c.apply({{"colour", "red"}}));
  CHECK_THROWS(c.apply({{"predictor", "transformer"}}));
  CHECK_THROWS(ModelConfig::preset("gpt"));
}

TEST_CASE("mini models run end to end in both predictor layouts") {
  Rng rng(16);
  std::vector<Raster> imgs;
  for (int i = 0; i < 2; ++i) imgs.push_back(strfew::testing::random_raster(rng, 70, 20));
  const Tensor4<float> x = to_input<float>(imgs);
  CHECK(x.h == 32);
  CHECK(x.w == 100);
  CHECK(x.data.maxCoeff() <= 1.0f);
  CHECK(x.data.minCoeff() >= -1.0f);
  for (const auto& cfg : {ModelConfig::mini_crnn(), ModelConfig::mini_trba()}) {
    StrModel<float> m(cfg, 3);
    const auto preds = m.predict(x);
    REQUIRE(preds.size() == 2);
    for (const auto& p : preds) {
      CHECK(p.confidence >= 0.0);
      CHECK(p.confidence <= 1.0);
      CHECK(p.text.size() <= 26);
    }
    std::vector<std::vector<int>> targets{encode_classes("ab", m.charset(), cfg.predictor),
                                          encode_classes("xyz", m.charset(), cfg.predictor)};
    const auto out = m.forward(x, Mode::kTrain, &targets);
    if (cfg.predictor == Predictor::kCtc) {
      CHECK(out.logits.steps == 26);
      CHECK(out.logits.dim() == 95);
    } else {
      CHECK(out.logits.steps == 4);
      CHECK(out.logits.dim() == 96);
      CHECK_THROWS(m.forward(x, Mode::kTrain));
    }
  }
}

TEST_CASE("whole-model gradient spot check through TPS, backbone, BiLSTM and attention") {
  Rng rng(17);
  ModelConfig cfg = ModelConfig::mini_trba();
  cfg.hidden = 8;
  cfg.attention_hidden = 8;
  cfg.tps.loc_channels = {4, 4, 4, 4};
  cfg.tps.loc_hidden = 8;
  StrModel<double> m(cfg, 5);
  // Nudge the fiducial regressor off its zero initialisation so the TPS path
  // carries gradient.
  m.visit([&](const std::string& name, Param<double>& p) {
    if (name == "transform.fc2.weight") p.value = random_mat(rng, p.value.rows(), p.value.cols(), 0.05);
  });
  std::vector<Raster> imgs{strfew::testing::random_raster(rng, 100, 32), strfew::testing::random_raster(rng, 100, 32)};
  const Tensor4<double> x = to_input<double>(imgs);
  const std::vector<std::vector<int>> targets{{5, 9}, {12}};
  const auto out = m.forward(x, Mode::kTrain, &targets);
  const Mat<double> r = random_mat(rng, out.logits.data.rows(), out.logits.data.cols());
  m.zero_grad();
  m.forward(x, Mode::kTrain, &targets);
  SeqBatch<double> g = out.logits;
  g.data = r;
  m.backward(g);
  auto loss = [&] { return m.forward(x, Mode::kTrain, &targets).logits.data.cwiseProduct(r).sum(); };
  int checked = 0;
  m.visit([&](const std::string& name, Param<double>& p) {
    if (!p.trainable) return;
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
    const double keep = p.value.data()[i];
    const double h = 1e-6;
    p.value.data()[i] = keep + h;
    const double up = loss();
    p.value.data()[i] = keep - h;
    const double down = loss();
    p.value.data()[i] = keep;
    const double num = (up - down) / (2 * h);
    const double ana = p.grad.data()[i];
    INFO(name);
    CHECK(std::abs(num - ana) <= 1e-4 * std::max({1.0, std::abs(num), std::abs(ana)}));
    ++checked;
  });
  CHECK(checked > 20);
}

TEST_CASE("checkpoint round-trip and validation") {
  TempDir dir("ckpt");
  const ModelConfig cfg = ModelConfig::mini_crnn();
  StrModel<float> a(cfg, 1), b(cfg, 2);
  const Checkpoint c = make_checkpoint(a, cfg, 1234, 87.5);
  save_checkpoint(c, dir / "a.ckpt");
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.iteration == 1234);
  CHECK(back.val_accuracy == 87.5);
  CHECK(back.config().digest() == cfg.digest());
  load_into(b, cfg, back);
  std::vector<Raster> imgs{Raster(100, 32, 1, 90)};
  const auto x = to_input<float>(imgs);
  std::vector<Mat<float>> la, lb;
  a.predict(x, &la);
  b.predict(x, &lb);
  CHECK(la[0] == lb[0]);

  ModelConfig other = cfg;
  other.hidden = 32;
  StrModel<float> wrong(other, 1);
  CHECK_THROWS_AS(load_into(wrong, other, back), CheckpointError);

  {
    std::fstream f(dir / "a.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    f.put('\x5a');
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "a.ckpt"), CheckpointError);
  CHECK_THROWS(load_checkpoint(dir / "missing.ckpt"));
}

TEST_CASE("pretext backbone weights load into a recognizer") {
  const ModelConfig cfg = ModelConfig::mini_crnn();
  PretextModel<float> pre(cfg, PretextKind::kRotation, 3);
  Checkpoint c;
  c.config_text = cfg.to_text();
  c.digest = cfg.digest();
  pre.visit_backbone([&](const std::string& name, Param<float>& p) { c.blobs[name] = p.value; });
  for (const auto& [name, blob] : c.blobs) CHECK(name.rfind("features.", 0) == 0);
  StrModel<float> m(cfg, 9);
  load_into(m, cfg, c, "features.");
  m.visit([&](const std::string& name, Param<float>& p) {
    if (name.rfind("features.", 0) == 0) CHECK(p.value == c.blobs.at(name));
  });
}

}  // TEST_SUITE
