// tinyasr/tests/test_contextual.cpp
//
// Copyright 2026 The tinyasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "tinyasr/contextual.h"
#include "tinyasr/paraformer.h"

using namespace tinyasr;

namespace {

AsrModel SmallModel(uint64_t seed = 11) {
  AsrConfig cfg;
  cfg.vocab = 16;
  cfg.d_model = 32;
  cfg.d_ffn = 64;
  cfg.ts_hidden = 16;
  Rng rng(seed);
  return AsrModel::Init(cfg, rng);
}

Tensor RandomMat(int r, int c, Rng& rng) {
  Tensor x({r, c});
  for (int64_t i = 0; i < x.numel(); ++i)
    x[i] = static_cast<float>(rng.normal());
  return x;
}

}  // namespace

TEST_CASE("embed_hotwords: no-bias row, zero params, per-word independence") {
  AsrModel m = SmallModel();
  const int d = m.cfg.d_model;

  const Tensor none = EmbedHotwords(m, {});
  REQUIRE(none.dim(0) == 1);
  for (int c = 0; c < d; ++c) CHECK(none.at(0, c) == 0.0f);

  AsrModel zm = m;
  zm.params["hw.lstm.wx"].fill(0.0f);
  zm.params["hw.lstm.wh"].fill(0.0f);
  zm.params["hw.lstm.b"].fill(0.0f);
  const Tensor zero = EmbedHotwords(zm, {{1, 2}, {3}});
  for (int64_t i = 0; i < zero.numel(); ++i) CHECK(zero[i] == 0.0f);

  const Tensor ab = EmbedHotwords(m, {{1, 2, 3}, {4, 5}});
  const Tensor ba = EmbedHotwords(m, {{4, 5}, {1, 2, 3}});
  for (int c = 0; c < d; ++c) {
    CHECK(ab.at(1, c) == ba.at(2, c));
    CHECK(ab.at(2, c) == ba.at(1, c));
  }
  const Tensor again = EmbedHotwords(m, {{1, 2, 3}, {4, 5}});
  for (int64_t i = 0; i < ab.numel(); ++i) CHECK(ab[i] == again[i]);

  CHECK_THROWS(EmbedHotwords(m, {{}}));
  CHECK_THROWS(EmbedHotwords(m, {{m.cfg.vocab}}));
}

TEST_CASE("contextual_layer: shapes, zero-bias path, permutation invariance") {
  AsrModel m = SmallModel();
  const int d = m.cfg.d_model;
  FloatExec exec;
  Rng rng(3);
  const Tensor es = RandomMat(5, d, rng);
  const Tensor mem = RandomMat(9, d, rng);

  SUBCASE("shape holds for any hotword count") {
    for (int k : {0, 1, 4}) {
      Tensor eh({k + 1, d});
      for (int64_t i = d; i < eh.numel(); ++i)
        eh[i] = static_cast<float>(rng.normal());
      const Tensor o = ContextualLayer(m, es, mem, eh, exec);
      CHECK(o.dim(0) == 5);
      CHECK(o.dim(1) == d);
    }
  }

  SUBCASE("no-bias-only attention contributes exactly zero context") {
    // With one all-zero value row, E_c is zero regardless of the scores,
    // so the combiner sees [E_s''; 0]: zeroing the half of the combiner
    // weights that reads E_c must not change the output.
    Tensor eh({1, d});
    const Tensor full = ContextualLayer(m, es, mem, eh, exec);
    AsrModel cut = m;
    for (int r = 0; r < d; ++r)
      for (int c = d; c < 2 * d; ++c) cut.params["ctx.comb.w"].at(r, c) = 0.0f;
    const Tensor trimmed = ContextualLayer(cut, es, mem, eh, exec);
    for (int64_t i = 0; i < full.numel(); ++i) CHECK(full[i] == trimmed[i]);
  }

  SUBCASE("permuting hotword rows leaves the output unchanged") {
    Tensor eh({4, d});
    for (int64_t i = d; i < eh.numel(); ++i)
      eh[i] = static_cast<float>(rng.normal());
    Tensor perm({4, d});
    const int order[4] = {0, 3, 1, 2};  // row 0 (no-bias) stays put
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < d; ++c) perm.at(r, c) = eh.at(order[r], c);
    const Tensor a = ContextualLayer(m, es, mem, eh, exec);
    const Tensor b = ContextualLayer(m, es, mem, perm, exec);
    for (int64_t i = 0; i < a.numel(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5));
  }
}

TEST_CASE("sample_training_hotwords: p_none, reproducibility, substrings") {
  const std::vector<int> target = {3, 1, 4, 1, 5, 9, 2, 6};

  HotwordSampleConfig all_none;
  all_none.p_none = 1.0f;
  Rng rng(1);
  for (int i = 0; i < 20; ++i)
    CHECK(SampleTrainingHotwords(target, rng, all_none).empty());

  HotwordSampleConfig cfg;
  cfg.p_none = 0.0f;
  Rng r1(42), r2(42);
  const HotwordList a = SampleTrainingHotwords(target, r1, cfg);
  const HotwordList b = SampleTrainingHotwords(target, r2, cfg);
  CHECK(a == b);

  Rng rng2(7);
  for (int iter = 0; iter < 100; ++iter) {
    const HotwordList words = SampleTrainingHotwords(target, rng2, cfg);
    CHECK(words.size() >= 1);
    CHECK(words.size() <= static_cast<size_t>(cfg.k_max));
    for (const std::vector<int>& w : words) {
      CHECK(static_cast<int>(w.size()) >= cfg.l_min);
      CHECK(static_cast<int>(w.size()) <= cfg.l_max);
      // every sampled n-gram is a contiguous substring of the target
      bool found = false;
      for (size_t s = 0; s + w.size() <= target.size() && !found; ++s)
        found = std::equal(w.begin(), w.end(), target.begin() + s);
      CHECK(found);
    }
  }
}

TEST_CASE("entity metrics: closed-form cases") {
  using V = std::vector<int>;
  const std::vector<V> entities = {{7, 8}};

  SUBCASE("R=74 P=100 -> F1 85.06") {
    // 100 refs contain the entity; 74 hyps keep it, 26 drop it, nothing
    // is hallucinated.
    std::vector<V> refs(100, V{1, 7, 8, 2}), hyps;
    for (int i = 0; i < 74; ++i) hyps.push_back({1, 7, 8, 2});
    for (int i = 0; i < 26; ++i) hyps.push_back({1, 2});
    const EntityMetrics mtr = ComputeEntityMetrics(hyps, refs, entities);
    CHECK(mtr.recall == doctest::Approx(74.0));
    CHECK(mtr.precision == doctest::Approx(100.0));
    CHECK(mtr.f1 == doctest::Approx(85.0575).epsilon(1e-4));
    CHECK(std::lround(mtr.f1) == 85);
  }
  SUBCASE("total miss -> all zeros, including F1") {
    const EntityMetrics mtr =
        ComputeEntityMetrics({{1, 2}}, {{7, 8}}, entities);
    CHECK(mtr.recall == 0.0);
    CHECK(mtr.precision == 0.0);
    CHECK(mtr.f1 == 0.0);
  }
  SUBCASE("exact -> 100 everywhere") {
    const EntityMetrics mtr =
        ComputeEntityMetrics({{7, 8}}, {{7, 8}}, entities);
    CHECK(mtr.recall == doctest::Approx(100.0));
    CHECK(mtr.precision == doctest::Approx(100.0));
    CHECK(mtr.f1 == doctest::Approx(100.0));
  }
}

TEST_CASE("hotword file parsing") {
  const std::string path = "/tmp/tinyasr_test_hotwords.txt";
  {
    std::ofstream f(path);
    f << "1 2 3\n\n7 8\n\n\n4\n";
  }
  const HotwordList words = LoadHotwordFile(path);
  REQUIRE(words.size() == 3);
  CHECK(words[0] == std::vector<int>{1, 2, 3});
  CHECK(words[1] == std::vector<int>{7, 8});
  CHECK(words[2] == std::vector<int>{4});
  std::remove(path.c_str());
  CHECK_THROWS(LoadHotwordFile("/tmp/tinyasr_missing_hotwords.txt"));
}
