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

#include <fstream>
#include <iterator>

#include "doctest.h"
#include "strfew/corpus/preprocess.hpp"
#include "strfew/toy.hpp"
#include "support/testing.hpp"

using namespace strfew;
using strfew::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("toy") {

TEST_CASE("fifty words at twenty renders give a thousand entries") {
  ToyCorpusSpec spec;
  spec.vocabulary = ToyCorpusSpec::default_vocabulary();
  REQUIRE(spec.vocabulary.size() == 50);
  spec.samples_per_word = 20;
  const auto samples = render_toy_labeled(spec);
  CHECK(samples.size() == 1000);
  CHECK(samples[0].label == spec.vocabulary[0]);
  CHECK(samples[20].label == spec.vocabulary[1]);
  for (const auto& s : samples) {
    CHECK(s.image.height == 32);
    CHECK(s.image.width > 0);
    CHECK(s.dataset == "toy");
  }
}

TEST_CASE("same spec renders byte-identical corpora") {
  TempDir a("toy_a"), b("toy_b");
  ToyCorpusSpec spec;
  spec.vocabulary = {"alpha", "Beta", "g4mma"};
  spec.samples_per_word = 3;
  spec.unlabeled_per_word = 2;
  spec.seed = 42;
  const ToyCorpus ca = render_toy_corpus(spec, a.path());
  render_toy_corpus(spec, b.path());
  REQUIRE(ca.unlabeled.has_value());
  CHECK(ca.labeled.entries.size() == 9);
  CHECK(ca.unlabeled->entries.size() == 6);
  int files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    CHECK(slurp(e.path()) == slurp(b.path() / rel));
    ++files;
  }
  CHECK(files == 9 + 6 + 2);
}

TEST_CASE("unlabeled twin uses fresh renders") {
  ToyCorpusSpec spec;
  spec.vocabulary = {"word"};
  spec.samples_per_word = 2;
  spec.unlabeled_per_word = 2;
  const auto lab = render_toy_labeled(spec);
  const auto unl = render_toy_unlabeled(spec);
  REQUIRE(unl.size() == 2);
  for (const auto& u : unl) {
    for (const auto& l : lab) CHECK(u.image.pixels != l.image.pixels);
  }
}

TEST_CASE("different seeds render differently") {
  ToyCorpusSpec spec;
  spec.vocabulary = {"word"};
  spec.samples_per_word = 1;
  const auto a = render_toy_labeled(spec);
  spec.seed = 1;
  const auto b = render_toy_labeled(spec);
  CHECK(a[0].image.pixels != b[0].image.pixels);
}

TEST_CASE("toy output passes the default filters") {
  ToyCorpusSpec spec;
  spec.vocabulary = ToyCorpusSpec::default_vocabulary();
  spec.samples_per_word = 3;
  const auto res = filter_samples(render_toy_labeled(spec), default_filter_policy("toy", true), Charset::standard());
  CHECK(res.kept.size() == 150);
  CHECK(res.log.empty());
}

TEST_CASE("unrenderable characters and bad specs are rejected") {
  Rng rng(1);
  CHECK_THROWS_WITH(render_word("caf\xc3\xa9", ToyJitter{}, 32, rng), doctest::Contains("glyph"));
  ToyCorpusSpec spec;
  CHECK_THROWS(spec.validate());
  spec.vocabulary = {std::string(26, 'a')};
  CHECK_THROWS(spec.validate());
  spec.vocabulary = {"ok"};
  spec.samples_per_word = 0;
  CHECK_THROWS(spec.validate());
}

}  // TEST_SUITE
