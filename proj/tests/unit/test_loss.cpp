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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "strfew/loss.hpp"
#include "support/testing.hpp"

using namespace strfew;
using nn::Mat;
using strfew::testing::numeric_grad;
using strfew::testing::random_mat;
using strfew::testing::rel_error;

namespace {

Mat<double> probs_of(const Mat<double>& logits) { return nn::softmax_rows(logits); }

std::vector<int> random_label(Rng& rng, int max_len, int classes) {
  std::vector<int> label(rng.below(static_cast<std::uint64_t>(max_len) + 1));
  for (int& k : label) k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes - 1)));
  return label;
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("two frames, uniform probabilities, label a") {
  const Mat<double> logits = Mat<double>::Zero(2, 2);
  const LossValue l = ctc_nll(logits, std::vector<int>{1});
  CHECK(l.feasible);
  CHECK(l.value == doctest::Approx(0.287682).epsilon(1e-6));
  CHECK(l.value == doctest::Approx(-std::log(0.75)));
  CHECK(ctc_oracle_nll(probs_of(logits), {1}).value == doctest::Approx(-std::log(0.75)));
}

TEST_CASE("repeated symbols need a separating blank") {
  const Mat<double> logits = Mat<double>::Zero(2, 2);
  Mat<double> grad;
  const LossValue l = ctc_nll(logits, std::vector<int>{1, 1}, &grad);
  CHECK_FALSE(l.feasible);
  CHECK(std::isinf(l.value));
  CHECK(grad.isZero());
  CHECK(ctc_min_frames({1, 1}) == 3);
  CHECK(ctc_min_frames({1, 2, 2, 2}) == 6);
  CHECK(ctc_nll(Mat<double>::Zero(3, 2).eval(), std::vector<int>{1, 1}).feasible);
}

TEST_CASE("a confident feasible path drives the loss to zero") {
  double prev = 1e9;
  for (double margin : {2.0, 5.0, 10.0, 20.0}) {
    Mat<double> logits = Mat<double>::Zero(4, 3);
    const int path[] = {1, 0, 2, 2};
    for (int t = 0; t < 4; ++t) logits(t, path[t]) = margin;
    const double v = ctc_nll(logits, std::vector<int>{1, 2}).value;
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("empty label scores the all-blank path") {
  Rng rng(1);
  const Mat<double> logits = random_mat(rng, 5, 3);
  const Mat<double> p = probs_of(logits);
  double expect = 0;
  for (int t = 0; t < 5; ++t) expect -= std::log(p(t, 0));
  CHECK(ctc_nll(logits, std::vector<int>{}).value == doctest::Approx(expect));
  CHECK(ctc_oracle_nll(p, {}).value == doctest::Approx(expect));
}

TEST_CASE("forward algorithm agrees with brute-force enumeration") {
  Rng rng(2);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + static_cast<int>(rng.below(6));
    const int C = 2 + static_cast<int>(rng.below(3));  // blank plus up to three symbols
    const Mat<double> logits = random_mat(rng, T, C, 2.0);
    const std::vector<int> label = random_label(rng, 4, C);
    const LossValue fast = ctc_nll(logits, label);
    const LossValue slow = ctc_oracle_nll(probs_of(logits), label);
    CHECK(fast.feasible == slow.feasible);
    if (fast.feasible) {
      CHECK(std::abs(fast.value - slow.value) <= 1e-6);
      ++compared;
    }
  }
  CHECK(compared > 100);
}

TEST_CASE("oracle refuses large instances") {
  CHECK_THROWS_AS(ctc_oracle_nll(Mat<double>::Constant(9, 2, 0.5), {1}), OracleTooLarge);
  CHECK_THROWS_AS(ctc_oracle_nll(Mat<double>::Constant(3, 7, 1.0 / 7), {1}), OracleTooLarge);
}

TEST_CASE("CTC gradient matches finite differences") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = 3 + static_cast<int>(rng.below(5));
    Mat<double> logits = random_mat(rng, T, 4);
    std::vector<int> label = random_label(rng, 3, 4);
    if (ctc_min_frames(label) > T) continue;
    Mat<double> grad;
    ctc_nll(logits, label, &grad);
    const Mat<double> num = numeric_grad(logits, [&] { return ctc_nll(logits, label).value; });
    CHECK(rel_error(grad, num) <= 1e-4);
  }
}

TEST_CASE("CTC labels outside the class range are rejected") {
  CHECK_THROWS(ctc_nll(Mat<double>::Zero(3, 3).eval(), std::vector<int>{0}));
  CHECK_THROWS(ctc_nll(Mat<double>::Zero(3, 3).eval(), std::vector<int>{3}));
}

TEST_CASE("string labels go through the charset offset") {
  const Charset& cs = Charset::standard();
  const Mat<double> logits = Mat<double>::Zero(4, CtcClasses::count(cs));
  const double a = ctc_nll(logits, std::string("ab"), cs).value;
  const double b = ctc_nll(logits, std::vector<int>{*cs.index_of('a') + 1, *cs.index_of('b') + 1}).value;
  CHECK(a == b);
}

TEST_CASE("attention loss examples") {
  const int C = AttentionClasses::count(Charset::standard());
  const Mat<double> uniform = Mat<double>::Zero(3, C);
  CHECK(attention_nll(uniform, {4, 5, 1}).value == doctest::Approx(std::log(C)));

  Mat<double> onehot = Mat<double>::Zero(2, 4);
  onehot(0, 2) = 60;
  onehot(1, 1) = 60;
  CHECK(attention_nll(onehot, {2, 1}).value < 1e-12);

  // Row 0: p(true) = 0.5, row 1: p(true) = 0.25.
  Mat<double> two(2, 2);
  two << 0.0, 0.0, std::log(3.0), 0.0;
  CHECK(attention_nll(two, {1, 1}).value == doctest::Approx(1.039721).epsilon(1e-6));
  CHECK_THROWS(attention_nll(two, {1}));
  CHECK_THROWS(attention_nll(two, {1, 2}));
}

TEST_CASE("attention gradient matches finite differences") {
  Rng rng(4);
  Mat<double> logits = random_mat(rng, 4, 6);
  const std::vector<int> target{3, 2, 5, 1};
  Mat<double> grad;
  attention_nll(logits, target, &grad);
  CHECK(rel_error(grad, numeric_grad(logits, [&] { return attention_nll(logits, target).value; })) <= 1e-4);
}

TEST_CASE("consistency loss") {
  Rng rng(5);
  const Mat<double> a = random_mat(rng, 3, 4);
  CHECK(consistency_mse(a, a).value == 0.0);
  CHECK(consistency_mse((a.array() + 0.3).matrix().eval(), a).value == doctest::Approx(0.09));
  CHECK(consistency_mse(a, (a.array() - 0.3).matrix().eval()).value == doctest::Approx(0.09));
  CHECK_THROWS(consistency_mse(a, Mat<double>::Zero(3, 3).eval()));
  Mat<double> s = random_mat(rng, 3, 4);
  Mat<double> grad;
  consistency_mse(s, a, &grad);
  CHECK(rel_error(grad, numeric_grad(s, [&] { return consistency_mse(s, a).value; })) <= 1e-6);
}

TEST_CASE("rotation loss") {
  CHECK(rotation_nll(Mat<double>::Zero(5, 4).eval(), {0, 1, 2, 3, 0}).value == doctest::Approx(1.386294).epsilon(1e-6));
  Mat<double> perfect = Mat<double>::Zero(4, 4);
  for (int i = 0; i < 4; ++i) perfect(i, i) = 60;
  CHECK(rotation_nll(perfect, {0, 1, 2, 3}).value < 1e-12);
  CHECK_THROWS(rotation_nll(perfect, {0, 1, 2, 4}));
  CHECK_THROWS(rotation_nll(Mat<double>::Zero(4, 3).eval(), {0, 1, 2, 0}));
}

TEST_CASE("InfoNCE with two orthogonal negatives") {
  Mat<double> q(1, 3), n(2, 3);
  q << 1, 0, 0;
  n << 0, 1, 0, 0, 0, 1;
  const double v = info_nce(q, q, n, 1.0).value;
  CHECK(std::abs(v + std::log(std::exp(1.0) / (std::exp(1.0) + 2.0))) <= 1e-6);
  CHECK(v == doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 2.0))));
  CHECK(info_nce(q, q, n, 0.01).value < 1e-20);
  CHECK_THROWS(info_nce(q, q, n, 0.0));
  CHECK(info_nce(q, q, Mat<double>(0, 3), 0.07).value == 0.0);
}

TEST_CASE("InfoNCE gradient and negative order invariance") {
  Rng rng(6);
  auto unit_rows = [&](int r, int c) {
    Mat<double> m = random_mat(rng, r, c);
    m.rowwise().normalize();
    return m;
  };
  Mat<double> q = unit_rows(3, 5);
  const Mat<double> k = unit_rows(3, 5), neg = unit_rows(7, 5);
  Mat<double> grad;
  const double v = info_nce(q, k, neg, 0.2, &grad).value;
  CHECK(rel_error(grad, numeric_grad(q, [&] { return info_nce(q, k, neg, 0.2).value; })) <= 1e-4);
  Mat<double> shuffled = neg;
  shuffled.row(0).swap(shuffled.row(6));
  shuffled.row(2).swap(shuffled.row(4));
  CHECK(info_nce(q, k, shuffled, 0.2).value == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("property: losses are nonnegative") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat<double> logits = random_mat(rng, 6, 4, 3.0);
    const LossValue c = ctc_nll(logits, random_label(rng, 3, 4));
    if (c.feasible) CHECK(c.value >= 0.0);
    CHECK(attention_nll(logits, {1, 2, 3, 0, 1, 2}).value >= 0.0);
    CHECK(rotation_nll(logits, {0, 1, 2, 3, 3, 0}).value >= 0.0);
    const Mat<double> other = random_mat(rng, 6, 4);
    CHECK(consistency_mse(logits, other).value > 0.0);
  }
}

TEST_CASE("CTC batch loss skips and counts infeasible samples") {
  nn::SeqBatch<double> logits(2, 3, 3);
  logits.data.setZero();
  long infeasible = 0;
  nn::SeqBatch<double> grad;
  const LossValue l = ctc_batch_loss(logits, {{1}, {1, 1}, {2}}, &grad, &infeasible);
  CHECK(infeasible == 1);
  CHECK(l.count == 2);
  CHECK(std::isfinite(l.value));
  CHECK(grad.item(1).isZero());
  CHECK_FALSE(grad.item(0).isZero());
}

TEST_CASE("attention batch loss ignores steps past the end token") {
  Rng rng(8);
  nn::SeqBatch<double> logits(4, 2, 5);
  logits.data = random_mat(rng, 8, 5);
  nn::SeqBatch<double> grad;
  const std::vector<std::vector<int>> targets{{2, 3, 4}, {2}};
  attention_batch_loss(logits, targets, &grad);
  CHECK(grad.data.row(2 * 2 + 1).isZero());
  CHECK(grad.data.row(3 * 2 + 1).isZero());
  auto f = [&] { return attention_batch_loss<double>(logits, targets, nullptr).value; };
  CHECK(rel_error(grad.data, numeric_grad(logits.data, f)) <= 1e-6);
  CHECK_THROWS(attention_batch_loss(logits, {{2, 3, 4, 2}, {2}}, &grad));
}

}  // TEST_SUITE
