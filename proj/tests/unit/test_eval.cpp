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

#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "strfew/eval.hpp"
#include "strfew/model/input.hpp"
#include "support/testing.hpp"

using namespace strfew;
using Pairs = std::vector<std::pair<std::string, std::string>>;

namespace {

std::string random_ascii(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += static_cast<char>(32 + rng.below(95));
  return s;
}

Pairs repeat_pair(int n, const std::string& pred, const std::string& truth) { return Pairs(static_cast<std::size_t>(n), {pred, truth}); }

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("normalisation examples") {
  CHECK(normalize_for_eval("B,ook!") == "book");
  CHECK(normalize_for_eval("WiFi-5") == "wifi5");
  CHECK(normalize_for_eval("caf\xc3\xa9") == "caf");
  CHECK(normalize_for_eval("") == "");
  CHECK(eval_match("Hello!", "hello"));
  CHECK(eval_match("", "--"));
  CHECK_FALSE(eval_match("", "a"));
}

TEST_CASE("property: normalisation is idempotent and keeps only [a-z0-9]") {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const std::string s = random_ascii(rng, static_cast<int>(rng.below(30)));
    const std::string n = normalize_for_eval(s);
    CHECK(normalize_for_eval(n) == n);
    for (char c : n) CHECK(((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')));
  }
}

TEST_CASE("property: edits confined to removed characters do not change the score") {
  Rng rng(2);
  const std::string noise = "!?.,-_ '\"#@";
  for (int i = 0; i < 200; ++i) {
    const std::string truth = random_ascii(rng, 6);
    std::string pred = truth;
    for (int k = 0; k < 3; ++k) {
      const auto at = static_cast<std::size_t>(rng.below(pred.size() + 1));
      pred.insert(pred.begin() + static_cast<std::ptrdiff_t>(at), noise[rng.below(noise.size())]);
    }
    for (char& c : pred) {
      if (c >= 'a' && c <= 'z' && rng.below(2)) c = static_cast<char>(c - 'a' + 'A');
    }
    CHECK(eval_match(pred, truth));
  }
}

TEST_CASE("total is weighted by the union, not averaged over datasets") {
  const EvalReport r = score_predictions({{"small", repeat_pair(10, "a", "a")}, {"large", repeat_pair(90, "a", "b")}});
  CHECK(*r.datasets[0].accuracy() == 100.0);
  CHECK(*r.datasets[1].accuracy() == 0.0);
  CHECK(*r.total_accuracy() == doctest::Approx(10.0));
  CHECK(*r.mean_of_datasets() == doctest::Approx(50.0));
}

TEST_CASE("six benchmark splits form a union of 7672") {
  std::vector<std::pair<std::string, Pairs>> sets;
  const std::vector<std::pair<std::string, int>> sizes{{"IIIT", 3000}, {"SVT", 647}, {"IC13", 1015},
                                                       {"IC15", 2077}, {"SP", 645},  {"CT", 288}};
  for (const auto& [name, n] : sizes) sets.push_back({name, repeat_pair(n, "word", "WORD")});
  const EvalReport r = score_predictions(sets);
  CHECK(r.total_count() == 7672);
  for (const auto& d : r.datasets) CHECK(*d.accuracy() == 100.0);
  CHECK(*r.total_accuracy() == 100.0);
}

TEST_CASE("property: total equals pooled correct counts") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, Pairs>> sets;
    long correct = 0, total = 0;
    for (int d = 0; d < 1 + static_cast<int>(rng.below(6)); ++d) {
      Pairs p;
      for (int i = 0; i < static_cast<int>(rng.below(40)); ++i) {
        const bool ok = rng.below(3) != 0;
        p.push_back({ok ? "x" : "y", "x"});
        correct += ok;
        ++total;
      }
      sets.push_back({"d" + std::to_string(d), p});
    }
    const EvalReport r = score_predictions(sets);
    CHECK(r.total_count() == total);
    CHECK(r.total_correct() == correct);
    if (total > 0) CHECK(*r.total_accuracy() == doctest::Approx(100.0 * correct / total));
  }
}

TEST_CASE("empty splits report no accuracy") {
  const EvalReport r = score_predictions({{"empty", {}}, {"one", repeat_pair(1, "a", "a")}});
  CHECK_FALSE(r.datasets[0].accuracy().has_value());
  CHECK(*r.total_accuracy() == 100.0);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK_FALSE(j["datasets"][0].contains("accuracy"));
  CHECK(j["datasets"][1]["accuracy"] == 100.0);
  CHECK(j["total"]["count"] == 1);
  CHECK(r.table().find(" - ") != std::string::npos);
  CHECK_FALSE(score_predictions({}).total_accuracy().has_value());
}

TEST_CASE("table lists datasets, sizes and a total column") {
  EvalReport r = score_predictions({{"IIIT", repeat_pair(4, "a", "a")}, {"a_rather_long_dataset", repeat_pair(4, "a", "b")}});
  const std::string t = r.table("baseline");
  CHECK(t.find("IIIT") != std::string::npos);
  CHECK(t.find("a_rather_long_dataset") != std::string::npos);
  CHECK(t.find("Total") != std::string::npos);
  CHECK(t.find("50.0") != std::string::npos);
  std::vector<std::size_t> bars;
  std::istringstream lines(t);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  REQUIRE(all.size() == 3);
  CHECK(all[0].size() == all[1].size());
  CHECK(all[1].size() == all[2].size());
  const std::string multi = multi_run_table({r, r}, {"seed 1", "seed 2"});
  CHECK(multi.find("mean") != std::string::npos);
}

TEST_CASE("evaluation of a model is reproducible") {
  Rng rng(4);
  StrModel<float> m(ModelConfig::mini_crnn(), 2);
  std::vector<LabeledSample> split;
  for (int i = 0; i < 20; ++i) split.push_back({strfew::testing::random_raster(rng, 90, 30), "abc", "d", std::to_string(i), ""});
  const EvalReport a = evaluate(m, {{"d", split}});
  const EvalReport b = evaluate(m, {{"d", split}});
  CHECK(a.to_json() == b.to_json());
  CHECK(a.datasets[0].count == 20);
  CHECK(word_accuracy(m, split) == doctest::Approx(*a.total_accuracy()));
}

TEST_CASE("svg plot is a standalone document") {
  const std::string svg = render_svg_plot({{"baseline", {{20, 51.2}, {100, 86.6}}}, {"pl", {{20, 60.0}}}}, "accuracy",
                                          "ratio", "acc");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("baseline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

}  // TEST_SUITE
