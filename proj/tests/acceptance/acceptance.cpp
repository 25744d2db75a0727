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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a
// subset, e.g. `strfew_acceptance 1 2 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "strfew/augment.hpp"
#include "strfew/corpus/image_io.hpp"
#include "strfew/corpus/pack.hpp"
#include "strfew/corpus/preprocess.hpp"
#include "strfew/eval.hpp"
#include "strfew/loss.hpp"
#include "strfew/model/tps.hpp"
#include "strfew/sampler.hpp"
#include "strfew/ssl.hpp"
#include "strfew/toy.hpp"
#include "strfew/train/optim.hpp"
#include "strfew/train/recipe.hpp"
#include "support/testing.hpp"

using namespace strfew;
using nn::Mat;
using strfew::testing::numeric_grad;
using strfew::testing::random_mat;
using strfew::testing::random_raster;
using strfew::testing::rel_error;
using strfew::testing::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates failed checks so a criterion reports every violation.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  Outcome done(std::string detail) const {
    Outcome o;
    o.pass = failures_.empty();
    for (const auto& f : failures_) detail += "; FAILED: " + f;
    o.detail = std::move(detail);
    return o;
  }

 private:
  std::vector<std::string> failures_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const std::string& msg) { std::fprintf(stderr, "  .. %s\n", msg.c_str()); }

// ---------------------------------------------------------------------------

Outcome ctc_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  const double hand = ctc_nll(Mat<double>::Zero(2, 2).eval(), std::vector<int>{1}).value;
  c.expect(std::abs(hand - 0.287682) <= 1e-6, "hand case " + fmt("%.8f", hand));
  c.expect(std::abs(hand + std::log(0.75)) <= 1e-12, "hand case differs from -ln 0.75");
  Rng rng(20240);
  double worst = 0.0;
  int feasible = 0;
  for (int i = 0; i < 200; ++i) {
    const int T = 1 + static_cast<int>(rng.below(6));
    const int C = 2 + static_cast<int>(rng.below(4));  // blank plus at most four symbols
    const Mat<double> logits = random_mat(rng, T, C, 2.0);
    std::vector<int> label(rng.below(5));
    for (int& k : label) k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(C - 1)));
    const LossValue fast = ctc_nll(logits, label);
    const LossValue slow = ctc_oracle_nll(nn::softmax_rows(logits), label);
    c.expect(fast.feasible == slow.feasible, "feasibility disagrees on instance " + std::to_string(i));
    if (fast.feasible && slow.feasible) {
      worst = std::max(worst, std::abs(fast.value - slow.value));
      ++feasible;
    }
  }
  c.expect(worst <= 1e-6, "max difference " + fmt("%.3g", worst));
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fmt("%.2f s", secs));
  return c.done("200 instances (" + std::to_string(feasible) + " feasible), max |diff| " + fmt("%.2e", worst) +
                ", hand case " + fmt("%.6f", hand) + ", " + fmt("%.2f s", secs));
}

Outcome gradient_checks() {
  Checker c;
  Rng rng(77);
  double ctc_worst = 0, att_worst = 0, nce_worst = 0;
  for (int done = 0; done < 20;) {
    const int T = 3 + static_cast<int>(rng.below(4));
    Mat<double> logits = random_mat(rng, T, 4);
    std::vector<int> label(1 + rng.below(3));
    for (int& k : label) k = 1 + static_cast<int>(rng.below(3));
    if (ctc_min_frames(label) > T) continue;
    Mat<double> g;
    ctc_nll(logits, label, &g);
    ctc_worst = std::max(ctc_worst, rel_error(g, numeric_grad(logits, [&] { return ctc_nll(logits, label).value; })));
    ++done;
  }
  for (int i = 0; i < 20; ++i) {
    const int S = 1 + static_cast<int>(rng.below(5));
    Mat<double> logits = random_mat(rng, S, 6);
    std::vector<int> target(static_cast<std::size_t>(S));
    for (int& k : target) k = static_cast<int>(rng.below(6));
    Mat<double> g;
    attention_nll(logits, target, &g);
    att_worst = std::max(att_worst, rel_error(g, numeric_grad(logits, [&] { return attention_nll(logits, target).value; })));
  }
  for (int i = 0; i < 20; ++i) {
    auto unit = [&](int r) {
      Mat<double> m = random_mat(rng, r, 6);
      m.rowwise().normalize();
      return m;
    };
    Mat<double> q = unit(3);
    const Mat<double> k = unit(3), neg = unit(1 + static_cast<int>(rng.below(8)));
    const double tau = 0.05 + rng.uniform();
    Mat<double> g;
    info_nce(q, k, neg, tau, &g);
    nce_worst = std::max(nce_worst, rel_error(g, numeric_grad(q, [&] { return info_nce(q, k, neg, tau).value; })));
  }
  const nn::TpsGeometry geo(20, 4, 8);
  nn::Tensor4<double> img(1, 1, 4, 8);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] = rng.normal();
  nn::Tensor4<double> r(1, 1, 4, 8);
  for (Eigen::Index i = 0; i < r.data.size(); ++i) r.data[i] = rng.normal();
  Mat<double> fid = geo.canonical() * 0.8 + random_mat(rng, 20, 2, 0.05);
  const Mat<double> ana = geo.a().transpose() * nn::grid_sample_backward(img, 0, (geo.a() * fid).eval(), r);
  const Mat<double> num = numeric_grad(fid, [&] { return nn::tps_warp(img, {fid}, geo).data.dot(r.data); }, 1e-7);
  const double tps = rel_error(ana, num);
  c.expect(ctc_worst <= 1e-4, "ctc " + fmt("%.2e", ctc_worst));
  c.expect(att_worst <= 1e-4, "attention " + fmt("%.2e", att_worst));
  c.expect(nce_worst <= 1e-4, "info_nce " + fmt("%.2e", nce_worst));
  c.expect(tps <= 1e-3, "tps " + fmt("%.2e", tps));
  return c.done("max rel. error ctc " + fmt("%.1e", ctc_worst) + ", attention " + fmt("%.1e", att_worst) +
                ", info_nce " + fmt("%.1e", nce_worst) + ", tps 4x8 " + fmt("%.1e", tps));
}

Outcome closed_forms() {
  Checker c;
  const int C = AttentionClasses::count(Charset::standard());
  const double att = attention_nll(Mat<double>::Zero(4, C).eval(), {3, 4, 5, AttentionClasses::kEos}).value;
  const double rot = rotation_nll(Mat<double>::Zero(8, 4).eval(), {0, 1, 2, 3, 0, 1, 2, 3}).value;
  Mat<double> q(1, 3), n(2, 3);
  q << 1, 0, 0;
  n << 0, 1, 0, 0, 0, 1;
  const double nce = info_nce(q, q, n, 1.0).value;
  c.expect(std::abs(att - std::log(C)) <= 1e-6, "uniform attention " + fmt("%.8f", att));
  c.expect(std::abs(rot - 1.386294) <= 1e-6, "uniform rotation " + fmt("%.8f", rot));
  const double nce_exact = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  c.expect(std::abs(nce - nce_exact) <= 1e-6, "info_nce " + fmt("%.8f", nce));
  return c.done("ln " + std::to_string(C) + " = " + fmt("%.6f", att) + ", ln 4 = " + fmt("%.6f", rot) +
                ", InfoNCE(K=2, tau=1) = " + fmt("%.7f", nce) + " vs -ln(e/(e+2)) " + fmt("%.7f", nce_exact));
}

Outcome ema_and_queue() {
  Checker c;
  Rng rng(5);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double m = rng.uniform();
    nn::Param<double> t, s;
    t.value = Mat<double>::Constant(1, 1, rng.normal());
    s.value = Mat<double>::Zero(1, 1);
    double closed = t.value(0, 0);
    const int steps = 1 + static_cast<int>(rng.below(500));
    for (int i = 0; i < steps; ++i) {
      s.value(0, 0) = rng.normal();
      closed = m * closed + (1 - m) * s.value(0, 0);
      ema_update<double>({{"w", &t}}, {{"w", &s}}, m);
    }
    worst = std::max(worst, std::abs(t.value(0, 0) - closed));
  }
  c.expect(worst <= 1e-10, "EMA deviation " + fmt("%.2e", worst));

  bool fifo = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 1 + static_cast<int>(rng.below(64));
    const int B = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    NegativeQueue<double> q(K, 1);
    double next = 0;
    const int steps = K / B + 2 + static_cast<int>(rng.below(5));
    for (int s = 0; s < steps; ++s) {
      Mat<double> k(B, 1);
      for (int i = 0; i < B; ++i) k(i, 0) = next++;
      q.enqueue(k);
    }
    const Mat<double> keys = q.keys();
    fifo = fifo && q.size() == K;
    for (int i = 0; i < K; ++i) fifo = fifo && keys(i, 0) == next - K + i;
  }
  c.expect(fifo, "queue does not hold the most recent K keys in order");

  const ModelConfig cfg = ModelConfig::mini_crnn();
  PretextModel<float> query(cfg, PretextKind::kContrast, 1);
  PretextModel<float> key = query;
  NegativeQueue<float> queue(16, cfg.embedding_dim);
  std::vector<Raster> imgs;
  for (int i = 0; i < 4; ++i) imgs.push_back(random_raster(rng, 100, 32));
  const auto x = to_input<float>(imgs);
  std::vector<int> sizes;
  for (int s = 0; s < 7; ++s) {
    moco_step(query, key, queue, x, x, 0.07, 0.999);
    sizes.push_back(queue.size());
  }
  c.expect(sizes[3] == 16 && sizes[6] == 16, "MoCo queue size " + std::to_string(sizes.back()));
  return c.done("EMA max deviation " + fmt("%.1e", worst) + " over 50 trajectories; FIFO over 50 random K/B; MoCo queue " +
                std::to_string(sizes.front()) + " -> " + std::to_string(sizes.back()) + " (K=16)");
}

Outcome sampler_quotas() {
  Checker c;
  std::vector<std::size_t> eleven{231, 1794, 763, 3710, 3934, 818, 9198, 2886, 3351, 4551, 2279};
  BalancedSampler s11(eleven, 128, 1);
  bool exact = s11.quota() == 12;
  for (int b = 0; b < 10000 && exact; ++b) {
    std::vector<int> per(11, 0);
    for (const auto& r : s11.next_batch()) ++per[static_cast<std::size_t>(r.dataset)];
    exact = std::all_of(per.begin(), per.end(), [](int n) { return n == 12; });
  }
  c.expect(exact, "11-dataset batches are not 12 per dataset");
  BalancedSampler s3({500, 40, 7000}, 128, 2);
  bool three = s3.quota() == 43;
  for (int b = 0; b < 10000 && three; ++b) {
    std::vector<int> per(3, 0);
    for (const auto& r : s3.next_batch()) ++per[static_cast<std::size_t>(r.dataset)];
    three = per == std::vector<int>{43, 43, 43};
  }
  c.expect(three, "3-dataset batches are not 43 per dataset");
  return c.done("10,000 batches: 11 datasets x 12, 3 datasets x 43");
}

struct CraftedSample {
  std::string label;
  int w, h;
  std::optional<FilterRule> expect;
};

Outcome corpus_fixture() {
  Checker c;
  // Policy: pure-hash don't-care runs, '*' excluded, charset filter on,
  // labeled vertical rule, 25-character cap.
  FilterPolicy policy;
  policy.exclude_star_labels = true;
  const std::vector<CraftedSample> crafted{
      {"hello", 60, 20, std::nullopt},
      {"World", 80, 24, std::nullopt},
      {"a#b", 40, 20, std::nullopt},
      {"#####", 50, 20, std::nullopt},
      {"it", 10, 30, std::nullopt},
      {"ABC", 30, 30, std::nullopt},
      {std::string(25, 'x'), 300, 20, std::nullopt},
      {"12:45", 50, 20, std::nullopt},
      {"~{}|", 40, 20, std::nullopt},
      {"#", 20, 20, FilterRule::kDontCare},
      {"##", 30, 20, FilterRule::kDontCare},
      {"###", 40, 20, FilterRule::kDontCare},
      {"####", 10, 40, FilterRule::kDontCare},
      {"a*b", 40, 20, FilterRule::kStar},
      {"*", 20, 20, FilterRule::kStar},
      {"caf\xc3\xa9*", 40, 20, FilterRule::kStar},
      {"caf\xc3\xa9", 40, 20, FilterRule::kCharset},
      {"two words", 90, 20, FilterRule::kCharset},
      {"tab\there", 90, 20, FilterRule::kCharset},
      {"ABC", 20, 40, FilterRule::kVertical},
      {"tall", 10, 50, FilterRule::kVertical},
      {std::string(26, 'y'), 20, 300, FilterRule::kVertical},
      {std::string(26, 'z'), 300, 20, FilterRule::kLength},
      {std::string(40, 'q'), 400, 20, FilterRule::kLength},
      {"ok", 20, 20, std::nullopt},
  };
  c.expect(crafted.size() == 25, "fixture size");
  std::vector<LabeledSample> samples;
  std::set<std::string> expect_kept;
  std::array<std::size_t, kFilterRuleCount> expect_counts{};
  for (std::size_t i = 0; i < crafted.size(); ++i) {
    const auto& s = crafted[i];
    const std::string id = "c" + std::to_string(i);
    samples.push_back({Raster(s.w, s.h, 1, static_cast<std::uint8_t>(i * 9)), s.label, "fixture", id, ""});
    if (s.expect) {
      ++expect_counts[static_cast<std::size_t>(*s.expect)];
    } else {
      expect_kept.insert(id);
    }
  }
  const auto res = filter_samples(samples, policy, Charset::standard());
  std::set<std::string> kept;
  for (const auto& s : res.kept) kept.insert(s.id);
  c.expect(kept == expect_kept, "kept set differs from the hand enumeration");
  c.expect(res.rejected == expect_counts, "per-rule rejection counts differ");

  Rng rng(3);
  bool order_invariant = true;
  for (int trial = 0; trial < 20; ++trial) {
    auto shuffled = samples;
    rng.shuffle(shuffled);
    std::set<std::string> k;
    for (const auto& s : filter_samples(shuffled, policy, Charset::standard()).kept) k.insert(s.id);
    std::vector<int> order{0, 1, 2, 3, 4};
    rng.shuffle(order);
    std::set<std::string> k2;
    for (const auto& s : samples) {
      bool rej = false;
      for (int r : order) rej = rej || rule_rejects(static_cast<FilterRule>(r), &s.label, s.image.width, s.image.height, policy, Charset::standard());
      if (!rej) k2.insert(s.id);
    }
    order_invariant = order_invariant && k == kept && k2 == kept;
  }
  c.expect(order_invariant, "filter result depends on sample or rule order");

  bool splits_ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    SplitSpec spec{{0.6, 0.2, 0.2}, seed};
    const auto a = split_dataset(samples, spec);
    const auto b = split_dataset(samples, spec);
    std::multiset<std::string> all;
    for (const auto* part : {&a.train, &a.valid, &a.eval}) {
      for (const auto& s : *part) all.insert(s.id);
    }
    std::set<std::string> unique(all.begin(), all.end());
    splits_ok = splits_ok && all.size() == samples.size() && unique.size() == samples.size();
    auto ids = [](const std::vector<LabeledSample>& v) {
      std::vector<std::string> o;
      for (const auto& s : v) o.push_back(s.id);
      return o;
    };
    splits_ok = splits_ok && ids(a.train) == ids(b.train) && ids(a.valid) == ids(b.valid) && ids(a.eval) == ids(b.eval);
  }
  c.expect(splits_ok, "splits are not disjoint, exhaustive and seed-deterministic");

  TempDir dir("accept6");
  DatasetManifest m;
  std::vector<Raster> images;
  for (int i = 0; i < 25; ++i) {
    images.push_back(random_raster(rng, 10 + i, 8 + i % 5, i % 3 == 0 ? 3 : 1));
    const std::string file = "i" + std::to_string(i) + (images.back().channels == 3 ? ".ppm" : ".pgm");
    write_pnm(images.back(), dir / file);
    m.entries.push_back({file, crafted[static_cast<std::size_t>(i)].label, "fixture", images.back().width,
                         images.back().height, std::nullopt, "c" + std::to_string(i), "", std::nullopt});
  }
  pack_dataset(m, dir / "packed", dir.path());
  const PackedDataset back = PackedDataset::open(dir / "packed");
  bool round_trip = back.size() == 25;
  for (int i = 0; i < 25 && round_trip; ++i) {
    const auto idx = back.find("c" + std::to_string(i));
    round_trip = idx && back.image(*idx) == images[static_cast<std::size_t>(i)] &&
                 back.records()[*idx].label == m.entries[static_cast<std::size_t>(i)].label;
  }
  c.expect(round_trip, "pack/load round-trip is not bit-exact");
  return c.done(std::to_string(kept.size()) + " kept, rejections dont_care/star/charset/vertical/length = " +
                std::to_string(res.rejected[0]) + "/" + std::to_string(res.rejected[1]) + "/" +
                std::to_string(res.rejected[2]) + "/" + std::to_string(res.rejected[3]) + "/" +
                std::to_string(res.rejected[4]) + "; order-invariant; splits partition; pack round-trip exact");
}

Outcome augmentation_identities() {
  Checker c;
  Rng rng(8);
  int lsb = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Raster img = random_raster(rng, 20 + trial, 10 + trial, trial % 2 ? 3 : 1);
    c.expect(apply_augmentation(img, AugmentKind::kBlur, 0.0, rng) == img, "blur 0");
    c.expect(apply_augmentation(img, AugmentKind::kCrop, 100.0, rng) == img, "crop 100");
    c.expect(apply_augmentation(img, AugmentKind::kRot, 0.0, rng) == img, "rot 0");
    const int n = 8 + trial;
    const Raster sq = random_raster(rng, n, n, trial % 2 ? 3 : 1);
    const Raster twice = apply_augmentation(apply_augmentation(sq, AugmentKind::kRot, 90.0, rng), AugmentKind::kRot, 90.0, rng);
    const Raster once = apply_augmentation(sq, AugmentKind::kRot, 180.0, rng);
    int diff = 0;
    for (std::size_t i = 0; i < once.pixels.size(); ++i) diff = std::max(diff, std::abs(int(once.pixels[i]) - int(twice.pixels[i])));
    lsb = std::max(lsb, diff);
  }
  c.expect(lsb <= 1, "double 90 vs 180 differ by " + std::to_string(lsb));
  return c.done("blur 0 / crop 100 / rot 0 bit-exact on 20 images; 90+90 vs 180 max diff " + std::to_string(lsb) + " LSB");
}

Outcome schedule_and_clipping() {
  Checker c;
  OptimizerConfig cfg;
  cfg.total_iters = 200000;
  const std::int64_t peak = lr_peak_iter(cfg);
  c.expect(peak == 20000, "peak at " + std::to_string(peak));
  c.expect(lr_one_cycle(peak, cfg) == 0.0005, "peak value");
  bool mono = true;
  double prev = 0;
  bool after = false;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t it = static_cast<std::int64_t>(i) * (cfg.total_iters - 1) / 999;
    const double lr = lr_one_cycle(it, cfg);
    if (it <= peak) {
      mono = mono && lr >= prev;
    } else {
      if (!after) prev = cfg.max_lr;
      after = true;
      mono = mono && lr <= prev;
    }
    prev = lr;
  }
  c.expect(mono, "schedule not monotone on its segments");
  Rng rng(9);
  int clipped = 0;
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<nn::Param<double>> ps(1 + rng.below(4));
    std::vector<nn::NamedParam<double>> named;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      ps[i].value = Mat<double>::Zero(3, 3);
      ps[i].grad = random_mat(rng, 3, 3, std::pow(10.0, 2 * rng.uniform() - 0.5));
      named.push_back({"p" + std::to_string(i), &ps[i]});
    }
    const double before = clip_gradients(named, 5.0);
    if (before > 5.0) {
      ++clipped;
      worst = std::max(worst, global_grad_norm(named));
    }
  }
  c.expect(clipped > 0 && worst <= 5.0 + 1e-6, "post-clip norm " + fmt("%.9f", worst));
  return c.done("peak 0.0005 at iteration 20000 of 200000; monotone at 1000 points; " + std::to_string(clipped) +
                " clipped cases, max post-clip norm " + fmt("%.9f", worst));
}

Outcome evaluation_protocol() {
  Checker c;
  c.expect(normalize_for_eval("B,ook!") == "book", "B,ook!");
  c.expect(normalize_for_eval("WiFi-5") == "wifi5", "WiFi-5");
  const EvalReport r = score_predictions({{"ten", std::vector<std::pair<std::string, std::string>>(10, {"a", "a"})},
                                          {"ninety", std::vector<std::pair<std::string, std::string>>(90, {"a", "b"})}});
  c.expect(*r.datasets[0].accuracy() == 100.0 && *r.datasets[1].accuracy() == 0.0, "per-dataset accuracies");
  c.expect(std::abs(*r.total_accuracy() - 10.0) < 1e-12, "union total " + fmt("%.3f", *r.total_accuracy()));
  c.expect(std::abs(*r.mean_of_datasets() - 50.0) < 1e-12, "mean of datasets");
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> six;
  for (const auto& [name, n] : std::vector<std::pair<std::string, int>>{
           {"IIIT", 3000}, {"SVT", 647}, {"IC13", 1015}, {"IC15", 2077}, {"SP", 645}, {"CT", 288}}) {
    six.push_back({name, std::vector<std::pair<std::string, std::string>>(static_cast<std::size_t>(n), {"x", "X"})});
  }
  const EvalReport u = score_predictions(six);
  c.expect(u.total_count() == 7672, "union size " + std::to_string(u.total_count()));
  c.expect(*u.total_accuracy() == 100.0, "all-correct union");
  return c.done("normalisation examples; 10/90 case total " + fmt("%.1f", *r.total_accuracy()) + " vs mean " +
                fmt("%.1f", *r.mean_of_datasets()) + "; six-split union " + std::to_string(u.total_count()));
}

// ---------------------------------------------------------------------------
// Toy-scale training experiments.

struct ToySets {
  std::vector<LabeledSample> train;     // 50 words x 20 renders
  std::vector<LabeledSample> valid;     // model selection, fresh renders
  std::vector<LabeledSample> held_out;  // reporting only, fresh renders
};

const ToySets& toy_sets() {
  static const ToySets sets = [] {
    ToySets s;
    ToyCorpusSpec spec;
    spec.vocabulary = ToyCorpusSpec::default_vocabulary();
    spec.samples_per_word = 20;
    spec.seed = 1001;
    s.train = render_toy_labeled(spec);
    spec.samples_per_word = 2;
    spec.seed = 2002;
    s.valid = render_toy_labeled(spec);
    spec.samples_per_word = 10;
    spec.seed = 3003;
    s.held_out = render_toy_labeled(spec);
    return s;
  }();
  return sets;
}

TrainOptions toy_options(std::int64_t iters, std::uint64_t seed) {
  TrainOptions o;
  o.optim.total_iters = iters;
  o.optim.batch_size = 32;
  o.optim.max_lr = 2e-3;
  o.val_every = 500;
  o.log_every = 100;
  o.seed = seed;
  o.workers = 0;
  o.log = [](const std::string& msg) {
    if (msg.find("valid") != std::string::npos) progress(msg);
  };
  return o;
}

double accuracy_of(const Checkpoint& ck, const ModelConfig& cfg, const std::vector<LabeledSample>& samples) {
  StrModel<float> m(cfg, 0);
  load_into(m, cfg, ck);
  return word_accuracy(m, samples);
}

Outcome smoke_training() {
  Checker c;
  const ToySets& d = toy_sets();
  c.expect(d.train.size() == 1000, "toy corpus size " + std::to_string(d.train.size()));
  TrainData data;
  data.labeled = {{"toy", d.train}};
  data.valid = d.valid;
  const ModelConfig cfg = ModelConfig::mini_crnn();
  const auto t0 = std::chrono::steady_clock::now();
  const RecipeResult r = run_recipe(TrainRecipe{}, data, cfg, toy_options(3000, 1));
  const double secs = seconds_since(t0);
  const double train_acc = accuracy_of(r.best, cfg, d.train);
  const double held = accuracy_of(r.best, cfg, d.held_out);
  c.expect(train_acc >= 95.0, "training accuracy " + fmt("%.1f", train_acc));
  c.expect(held >= 80.0, "held-out accuracy " + fmt("%.1f", held));
  c.expect(secs <= 900.0, "wall clock " + fmt("%.0f s", secs));
  return c.done("mini-CRNN 3000 iterations: train " + fmt("%.1f%%", train_acc) + ", held-out " + fmt("%.1f%%", held) +
                ", " + fmt("%.0f s", secs));
}

constexpr std::int64_t kToyIters = 1500;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

/// 25% of the toy renders labeled, the rest unlabeled.
TrainData quarter_split(std::uint64_t seed) {
  const ToySets& d = toy_sets();
  const auto keep = subsample_indices(d.train.size(), 0.25, Rng::derive(seed, 77));
  std::vector<bool> labeled(d.train.size(), false);
  for (auto i : keep) labeled[i] = true;
  TrainData data;
  std::vector<LabeledSample> lab;
  std::vector<UnlabeledSample> unl;
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    const auto& s = d.train[i];
    if (labeled[i]) {
      lab.push_back(s);
    } else {
      unl.push_back({s.image, "toy_unlabeled", s.id, s.scene});
    }
  }
  data.labeled = {{"toy", lab}};
  data.unlabeled = {{"toy_unlabeled", unl}};
  data.valid = d.valid;
  return data;
}

struct SeedRun {
  double baseline = 0, pl = 0, pr = 0, rotation = 0;
};

/// Held-out accuracies per seed, computed once and shared by the PL and PR
/// criteria.
std::map<std::uint64_t, SeedRun>& seed_runs() {
  static std::map<std::uint64_t, SeedRun> runs;
  return runs;
}

double held_out_for(RecipeKind kind, std::uint64_t seed, double* rotation = nullptr) {
  const ModelConfig cfg = ModelConfig::mini_crnn();
  TrainData data = quarter_split(seed);
  if (kind == RecipeKind::kBaseline) data.unlabeled.clear();
  TrainRecipe recipe;
  recipe.kind = kind;
  recipe.pretext_optim.total_iters = 2000;
  recipe.pretext_optim.kind = OptimizerKind::kAdam;
  recipe.pretext_optim.max_lr = 2e-3;
  recipe.pretext_optim.momentum = 0.0;
  recipe.pretext_optim.weight_decay = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  const RecipeResult r = run_recipe(recipe, data, cfg, toy_options(kToyIters, seed));
  const double acc = accuracy_of(r.best, cfg, toy_sets().held_out);
  if (rotation) *rotation = r.pretext_accuracy;
  progress(to_string(kind) + " seed " + std::to_string(seed) + ": held-out " + fmt("%.1f%%", acc) + " in " +
           fmt("%.0f s", seconds_since(t0)));
  return acc;
}

Outcome pseudo_label_gain() {
  Checker c;
  double base = 0, pl = 0;
  std::string per;
  for (auto seed : kSeeds) {
    SeedRun& run = seed_runs()[seed];
    run.baseline = held_out_for(RecipeKind::kBaseline, seed);
    run.pl = held_out_for(RecipeKind::kPseudoLabel, seed);
    base += run.baseline / 3;
    pl += run.pl / 3;
    per += " " + fmt("%.1f", run.baseline) + "->" + fmt("%.1f", run.pl);
  }
  c.expect(pl - base >= 2.0, "gain " + fmt("%.2f", pl - base) + " points");
  return c.done("held-out baseline " + fmt("%.2f", base) + " vs PL " + fmt("%.2f", pl) + " (gain " +
                fmt("%+.2f", pl - base) + "; per seed" + per + ")");
}

Outcome rotnet_and_pr() {
  Checker c;
  double pl = 0, pr = 0, min_rot = 100;
  std::string per;
  for (auto seed : kSeeds) {
    SeedRun& run = seed_runs()[seed];
    if (run.pl == 0) run.pl = held_out_for(RecipeKind::kPseudoLabel, seed);
    run.pr = held_out_for(RecipeKind::kPr, seed, &run.rotation);
    min_rot = std::min(min_rot, run.rotation);
    pl += run.pl / 3;
    pr += run.pr / 3;
    per += " " + fmt("%.1f", run.pl) + "/" + fmt("%.1f", run.pr);
  }
  c.expect(min_rot >= 97.0, "rotation accuracy " + fmt("%.1f", min_rot));
  c.expect(pr >= pl - 1.0, "PR " + fmt("%.2f", pr) + " below PL " + fmt("%.2f", pl) + " - 1");
  return c.done("rotation accuracy (2000 iterations) min " + fmt("%.1f%%", min_rot) + "; held-out PL " + fmt("%.2f", pl) +
                " vs PR " + fmt("%.2f", pr) + " (per seed PL/PR" + per + ")");
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "CTC oracle equivalence", ctc_oracle},
      {2, "gradient checks", gradient_checks},
      {3, "closed-form loss values", closed_forms},
      {4, "EMA and queue invariants", ema_and_queue},
      {5, "sampler quotas", sampler_quotas},
      {6, "corpus fixture", corpus_fixture},
      {7, "augmentation identities", augmentation_identities},
      {8, "schedule and clipping", schedule_and_clipping},
      {9, "toy smoke training", smoke_training},
      {10, "pseudo-label gain", pseudo_label_gain},
      {11, "RotNet pretext and PR", rotnet_and_pr},
      {12, "evaluation protocol", evaluation_protocol},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& cr : all) {
    if (!only.empty() && !only.count(cr.id)) continue;
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
