// tinyasr/tests/test_punct.cpp
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
#include <string>
#include <vector>

#include "doctest.h"
#include "tinyasr/punct.h"

using namespace tinyasr;

namespace {

PunctModel SmallModel(uint64_t seed = 1) {
  PunctConfig cfg;
  cfg.vocab = 16;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ffn = 32;
  Rng rng(seed);
  return PunctModel::Init(cfg, rng);
}

std::vector<int> RandomTokens(Rng& rng, int n, int vocab) {
  std::vector<int> t(static_cast<size_t>(n));
  for (int& x : t) x = rng.uniform_int(vocab);
  return t;
}

// Offline reference: decode the whole stream once and annotate every
// position (what a stream with a single flush_all commit would produce).
std::vector<CommittedToken> OfflineDecode(const PunctModel& m,
                                          const std::vector<int>& tokens) {
  const auto [pl, dl] = PredictClasses(m, tokens);
  std::vector<int> pids, dids;
  for (int i = 0; i < pl.dim(0); ++i) {
    int bp = 0, bd = 0;
    for (int c = 1; c < pl.dim(1); ++c)
      if (pl.at(i, c) > pl.at(i, bp)) bp = c;
    for (int c = 1; c < dl.dim(1); ++c)
      if (dl.at(i, c) > dl.at(i, bd)) bd = c;
    pids.push_back(bp);
    dids.push_back(bd);
  }
  std::vector<CommittedToken> out;
  for (size_t i = 0; i < tokens.size(); ++i)
    out.push_back({tokens[i], static_cast<PunctClass>(pids[i]),
                   static_cast<DisfluencyTag>(dids[i])});
  return out;
}

}  // namespace

TEST_CASE("predict_classes: shapes, determinism, empty input") {
  PunctModel m = SmallModel();
  const auto [p1, d1] = PredictClasses(m, {3});
  CHECK(p1.dim(0) == 1);
  CHECK(p1.dim(1) == 5);
  CHECK(d1.dim(0) == 1);
  CHECK(d1.dim(1) == 2);

  const std::vector<int> toks = {1, 5, 2, 9, 0, 7};
  const auto [pa, da] = PredictClasses(m, toks);
  const auto [pb, db] = PredictClasses(m, toks);
  for (int64_t i = 0; i < pa.numel(); ++i) CHECK(pa[i] == pb[i]);
  for (int64_t i = 0; i < da.numel(); ++i) CHECK(da[i] == db[i]);

  CHECK_THROWS(PredictClasses(m, {}));
  CHECK_THROWS(PredictClasses(m, {99}));
}

TEST_CASE("predict_classes: edits beyond i + l_future cannot move output") {
  PunctModel m = SmallModel(7);
  const int l_future = m.cfg.l_future;
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> toks = RandomTokens(rng, 20, m.cfg.vocab);
    const auto [base, base_d] = PredictClasses(m, toks);
    const int edit = 8 + rng.uniform_int(10);  // position to change
    std::vector<int> poked = toks;
    poked[static_cast<size_t>(edit)] =
        (poked[static_cast<size_t>(edit)] + 1) % m.cfg.vocab;
    const auto [moved, moved_d] = PredictClasses(m, poked);
    for (int i = 0; i < base.dim(0); ++i) {
      if (i + l_future < edit) {
        for (int c = 0; c < 5; ++c) CHECK(moved.at(i, c) == base.at(i, c));
        for (int c = 0; c < 2; ++c) CHECK(moved_d.at(i, c) == base_d.at(i, c));
      }
    }
    // The horizon is tight: the edit is visible at i = edit - l_future.
    bool any_moved = false;
    const int i = edit - l_future;
    for (int c = 0; c < 5; ++c)
      if (moved.at(i, c) != base.at(i, c)) any_moved = true;
    CHECK(any_moved);
  }
}

TEST_CASE("freeze_point rule traces") {
  using P = PunctClass;
  const P N = P::kNone, PD = P::kPeriod;

  // Last sentence end among complete-look-ahead positions.
  CHECK(FreezePoint({N, N, N, N, PD, N, N}, 2, 40) == 5);
  // With l_future 3 the PERIOD at 4 has incomplete look-ahead in a
  // 7-token window, so nothing freezes.
  CHECK(FreezePoint({N, N, N, N, PD, N, N}, 3, 40) == 0);
  // No punctuation, short pending: nothing freezes.
  CHECK(FreezePoint({N, N, N, N}, 3, 40) == 0);
  // No punctuation, pending 50 > force_after 40: forced commit at 47.
  CHECK(FreezePoint(std::vector<P>(50, N), 3, 40) == 47);
  // Commas are not sentence ends.
  CHECK(FreezePoint({P::kComma, N, N, N, N}, 2, 40) == 0);
  // Question marks are.
  CHECK(FreezePoint({P::kQuestion, N, N, N, N}, 2, 40) == 1);
}

TEST_CASE("stream: empty push commits nothing and changes nothing") {
  PunctModel m = SmallModel();
  PunctStream s(&m);
  CHECK(s.Push({}).empty());
  CHECK(s.history_size() == 0);
  s.Push({1, 2, 3});
  const int hist = s.history_size(), pend = s.pending_size();
  CHECK(s.Push({}).empty());
  CHECK(s.history_size() == hist);
  CHECK(s.pending_size() == pend);
}

TEST_CASE("stream: bounded latency under forced commits") {
  PunctModel m = SmallModel(3);
  PunctStream s(&m);
  Rng rng(9);
  // Push far more than force_after in one chunk; the pending tail must
  // stay at or below force_after afterwards.
  s.Push(RandomTokens(rng, 3 * m.cfg.force_after, m.cfg.vocab));
  CHECK(s.pending_size() <= m.cfg.force_after);
  for (int step = 0; step < 30; ++step) {
    s.Push(RandomTokens(rng, 1 + rng.uniform_int(9), m.cfg.vocab));
    CHECK(s.pending_size() <= m.cfg.force_after);
  }
}

TEST_CASE("stream: chunked commits are prefix-stable and match offline") {
  PunctModel m = SmallModel(5);
  Rng rng(0xabcd);
  for (int trial = 0; trial < 8; ++trial) {
    // Short enough that no history discard occurs.
    const int n = 40 + rng.uniform_int(40);
    const std::vector<int> toks = RandomTokens(rng, n, m.cfg.vocab);
    const std::vector<CommittedToken> offline = OfflineDecode(m, toks);

    for (int variant = 0; variant < 3; ++variant) {
      PunctStream s(&m);
      std::vector<CommittedToken> got;
      size_t i = 0;
      while (i < toks.size()) {
        const size_t chunk = std::min<size_t>(
            toks.size() - i,
            variant == 0 ? 1 : static_cast<size_t>(1 + rng.uniform_int(7)));
        const auto c = s.Push(
            std::vector<int>(toks.begin() + static_cast<long>(i),
                             toks.begin() + static_cast<long>(i + chunk)));
        got.insert(got.end(), c.begin(), c.end());
        // Everything committed so far agrees with the offline decode.
        REQUIRE(got.size() <= offline.size());
        i += chunk;
      }
      const auto tail = s.Finalize();
      got.insert(got.end(), tail.begin(), tail.end());
      REQUIRE(got.size() == offline.size());
      for (size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k].token == offline[k].token);
        CHECK(got[k].punct == offline[k].punct);
        CHECK(got[k].tag == offline[k].tag);
      }
    }
  }
}

TEST_CASE("stream: history discard keeps uncommitted tokens") {
  PunctConfig cfg;
  cfg.vocab = 16;
  cfg.d_model = 16;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ffn = 32;
  cfg.max_history = 60;
  Rng rng(11);
  PunctModel m = PunctModel::Init(cfg, rng);
  PunctStream s(&m);
  int committed = 0;
  for (int step = 0; step < 60; ++step) {
    const auto c = s.Push(RandomTokens(rng, 5, cfg.vocab));
    committed += static_cast<int>(c.size());
    CHECK(s.history_size() <= cfg.max_history + 5 + cfg.force_after);
    CHECK(s.pending_size() >= 0);
  }
  CHECK(committed > 0);
}

TEST_CASE("render_text") {
  using P = PunctClass;
  using D = DisfluencyTag;
  const std::vector<RenderItem> items = {
      {"hello", P::kNone, D::kKeep},
      {"uh", P::kNone, D::kRemove},
      {"world", P::kPeriod, D::kKeep},
      {"ok", P::kQuestion, D::kKeep},
  };
  CHECK(RenderText(items) == "hello world. ok?");
  CHECK(RenderText(items) == RenderText(items));  // pure / idempotent
  CHECK(RenderText({}) == "");
  CHECK(RenderText({{"um", P::kComma, D::kRemove}}) == "");
  CHECK(PunctSymbol(P::kEnumComma) == "\xE3\x80\x81");
}

TEST_CASE("punct_metrics: exact scores") {
  using P = PunctClass;
  std::vector<P> ref, pred;

  // Identical sequences with marks: everything 100.
  ref = {P::kNone, P::kComma, P::kPeriod, P::kNone};
  PunctMetrics mm = ComputePunctMetrics(ref, ref);
  CHECK(mm.overall.precision == doctest::Approx(100.0));
  CHECK(mm.overall.recall == doctest::Approx(100.0));
  CHECK(mm.overall.f1 == doctest::Approx(100.0));

  // All-NONE prediction: zero recall, zero F1.
  pred = std::vector<P>(4, P::kNone);
  mm = ComputePunctMetrics(pred, ref);
  CHECK(mm.overall.recall == doctest::Approx(0.0));
  CHECK(mm.overall.f1 == doctest::Approx(0.0));

  CHECK_THROWS(ComputePunctMetrics({P::kNone}, ref));
}

TEST_CASE("punct_metrics: F1 arithmetic at P=62.7, R=55.3") {
  // Counts engineered so precision is exactly 62.7% and recall 55.3%:
  // 346731 hits, 553000 predicted marks, 627000 reference marks.
  const int hits = 346731, fp = 553000 - hits, fn = 627000 - hits;
  std::vector<PunctClass> pred, ref;
  pred.reserve(static_cast<size_t>(hits + fp + fn));
  ref.reserve(pred.capacity());
  auto push = [&](PunctClass p, PunctClass r, int n) {
    for (int i = 0; i < n; ++i) {
      pred.push_back(p);
      ref.push_back(r);
    }
  };
  push(PunctClass::kComma, PunctClass::kComma, hits);
  push(PunctClass::kComma, PunctClass::kNone, fp);
  push(PunctClass::kNone, PunctClass::kComma, fn);
  const PunctMetrics mm = ComputePunctMetrics(pred, ref);
  CHECK(mm.overall.precision == doctest::Approx(62.7).epsilon(1e-9));
  CHECK(mm.overall.recall == doctest::Approx(55.3).epsilon(1e-9));
  CHECK(mm.overall.f1 == doctest::Approx(58.76728).epsilon(1e-4));
  // Rounded to one decimal this is the 58.8 headline figure.
  CHECK(std::round(mm.overall.f1 * 10.0) / 10.0 == doctest::Approx(58.8));
}
