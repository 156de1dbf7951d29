// tinyasr/tests/test_paraformer.cpp
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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "tinyasr/cif.h"
#include "tinyasr/kernels.h"
#include "tinyasr/paraformer.h"
#include "tinyasr/simd.h"

using namespace tinyasr;

namespace {

AsrConfig SmallConfig() {
  AsrConfig cfg;
  cfg.vocab = 16;
  cfg.d_model = 32;
  cfg.d_ffn = 64;
  cfg.ts_hidden = 16;
  return cfg;
}

Tensor RandomFeatures(int t, int dim, Rng& rng) {
  Tensor x({t, dim});
  for (int64_t i = 0; i < x.numel(); ++i)
    x[i] = static_cast<float>(rng.normal());
  return x;
}

// Independent accumulate-and-fire simulator for the oracle comparison.
struct SimResult {
  std::vector<int> fires;
  std::vector<std::vector<float>> embs;
  float residual = 0.0f;
};

SimResult SimulateCif(const Tensor& hidden, const Tensor& alphas, float thr) {
  SimResult r;
  const int d = hidden.dim(1);
  std::vector<float> cur(d, 0.0f);
  float acc = 0.0f;
  for (int t = 0; t < hidden.dim(0); ++t) {
    float a = alphas[t];
    while (acc + a >= thr) {
      const float w = thr - acc;
      for (int i = 0; i < d; ++i) cur[i] += w * hidden.at(t, i);
      r.fires.push_back(t);
      r.embs.push_back(cur);
      std::fill(cur.begin(), cur.end(), 0.0f);
      a -= w;
      acc = 0.0f;
    }
    if (a > 0.0f) {
      for (int i = 0; i < d; ++i) cur[i] += a * hidden.at(t, i);
      acc += a;
    }
  }
  r.residual = acc;
  if (acc >= 0.5f * thr && hidden.dim(0) > 0) {
    r.fires.push_back(hidden.dim(0) - 1);
    r.embs.push_back(cur);
  }
  return r;
}

}  // namespace

TEST_CASE("cif: hand trace of the 0.6 weights example") {
  Tensor h({4, 2});
  for (int t = 0; t < 4; ++t) {
    h.at(t, 0) = static_cast<float>(t + 1);
    h.at(t, 1) = static_cast<float>(-(t + 1));
  }
  Tensor a({4});
  a.fill(0.6f);
  const cif::Result r = cif::integrate(h, a, 1.0f);
  REQUIRE(r.n_tokens == 2);
  CHECK(r.fires[0] == 1);
  CHECK(r.fires[1] == 3);
  // token0 = 0.6 h0 + 0.4 h1, token1 = 0.2 h1 + 0.6 h2 + 0.2 h3
  CHECK(r.embeddings.at(0, 0) ==
        doctest::Approx(0.6f * 1 + 0.4f * 2).epsilon(1e-6));
  CHECK(r.embeddings.at(1, 0) ==
        doctest::Approx(0.2f * 2 + 0.6f * 3 + 0.2f * 4).epsilon(1e-6));
  CHECK(r.residual == doctest::Approx(0.4f));

  Tensor zero({4});
  const cif::Result rz = cif::integrate(h, zero, 1.0f);
  CHECK(rz.n_tokens == 0);
  CHECK(rz.fires.empty());
}

TEST_CASE("cif: matches the step-by-step simulator on random cases") {
  // Exactness requires identical float operation order, so pin the
  // scalar kernels for this comparison.
  const simd::Level saved = simd::active_level();
  simd::set_level(simd::Level::kScalar);
  Rng rng(101);
  for (int iter = 0; iter < 1000; ++iter) {
    const int t = 1 + rng.uniform_int(30), d = 1 + rng.uniform_int(6);
    Tensor h = RandomFeatures(t, d, rng);
    Tensor a({t});
    for (int i = 0; i < t; ++i)
      a[i] = static_cast<float>(rng.uniform());  // at most one fire per frame
    const cif::Result got = cif::integrate(h, a, 1.0f);
    const SimResult want = SimulateCif(h, a, 1.0f);
    REQUIRE(got.fires == want.fires);
    CHECK(got.residual == want.residual);
    for (int j = 0; j < got.n_tokens; ++j)
      for (int i = 0; i < d; ++i)
        CHECK(got.embeddings.at(j, i) == want.embs[j][i]);
  }
  simd::set_level(saved);
}

TEST_CASE("cif: per-token used weight sums to the threshold") {
  Rng rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    const int t = 2 + rng.uniform_int(40);
    Tensor h = RandomFeatures(t, 3, rng);
    Tensor a({t});
    for (int i = 0; i < t; ++i) a[i] = 1.3f * static_cast<float>(rng.uniform());
    const cif::Result r = cif::integrate(h, a, 1.0f);
    if (r.n_tokens == 0) continue;
    std::vector<double> wsum(r.n_tokens, 0.0);
    for (const cif::Use& u : r.uses)
      if (u.token < r.n_tokens) wsum[u.token] += u.weight;  // skip discarded tail
    const bool tail_token = r.residual >= 0.5f;  // last token from the tail rule
    for (int j = 0; j < r.n_tokens - (tail_token ? 1 : 0); ++j)
      CHECK(wsum[j] == doctest::Approx(1.0).epsilon(1e-5));
    if (tail_token)
      CHECK(wsum[r.n_tokens - 1] == doctest::Approx(r.residual).epsilon(1e-4));
  }
}

TEST_CASE("scale_alphas: hand cases and the exact-count property") {
  Tensor a({4});
  a.fill(0.6f);
  const Tensor s = ScaleAlphas(a, 3.0f);
  for (int i = 0; i < 4; ++i) CHECK(s[i] == doctest::Approx(0.75f));
  Rng hr(1);
  Tensor h = RandomFeatures(4, 2, hr);
  CHECK(cif::integrate(h, s, 1.0f).n_tokens == 3);

  Tensor already({3});
  already.fill(1.0f);
  const Tensor unchanged = ScaleAlphas(already, 3.0f);
  for (int i = 0; i < 3; ++i)
    CHECK(unchanged[i] == doctest::Approx(1.0f).epsilon(1e-6));

  CHECK_THROWS(ScaleAlphas(Tensor({4}), 2.0f));  // zero sum

  Rng rng(55);
  for (int iter = 0; iter < 1000; ++iter) {
    const int t = 2 + rng.uniform_int(40);
    const int n = 1 + rng.uniform_int(std::max(1, t / 2));
    Tensor alphas({t});
    for (int i = 0; i < t; ++i)
      alphas[i] = 0.01f + static_cast<float>(rng.uniform());
    Tensor hid = RandomFeatures(t, 2, rng);
    const Tensor scaled = ScaleAlphas(alphas, static_cast<float>(n));
    CHECK(cif::integrate(hid, scaled, 1.0f).n_tokens == n);
  }
}

TEST_CASE("encode: shape, pre-norm identity, determinism") {
  const AsrConfig cfg = SmallConfig();
  Rng rng(11);
  AsrModel m = AsrModel::Init(cfg, rng);
  FloatExec exec;

  const Tensor one = RandomFeatures(1, cfg.feat_dim, rng);
  CHECK(Encode(m, one, exec).dim(0) == 1);
  CHECK(Encode(m, one, exec).dim(1) == cfg.d_model);

  const Tensor x = RandomFeatures(7, cfg.feat_dim, rng);
  const Tensor h1 = Encode(m, x, exec), h2 = Encode(m, x, exec);
  for (int64_t i = 0; i < h1.numel(); ++i) CHECK(h1[i] == h2[i]);
  CHECK(h1.all_finite());

  // Pre-norm residual blocks with zeroed output/second projections are
  // identities: the encoder reduces to ln_out(in_proj(x) + pos_enc).
  AsrModel zm = m;
  for (int i = 0; i < cfg.n_enc_layers; ++i) {
    zm.params["enc" + std::to_string(i) + ".att.wo"].fill(0.0f);
    zm.params["enc" + std::to_string(i) + ".ffn.w2"].fill(0.0f);
    zm.params["enc" + std::to_string(i) + ".ffn.b2"].fill(0.0f);
  }
  using namespace tinyasr::kernels;
  const Tensor base = add(
      linear(x, zm.P("in_proj.w"), zm.P("in_proj.b")),
      positional_encoding(x.dim(0), cfg.d_model));
  const Tensor want =
      layer_norm(base, zm.P("enc.ln_out.g"), zm.P("enc.ln_out.b"));
  const Tensor got = Encode(zm, x, exec);
  for (int64_t i = 0; i < want.numel(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-5));

  Tensor bad({3, cfg.feat_dim + 1});
  CHECK_THROWS(Encode(m, bad, exec));
}

TEST_CASE("predict_alphas: sigmoid behavior") {
  const AsrConfig cfg = SmallConfig();
  Rng rng(13);
  AsrModel m = AsrModel::Init(cfg, rng);
  FloatExec exec;
  const Tensor h = RandomFeatures(6, cfg.d_model, rng);

  AsrModel zm = m;
  zm.params["pred.out.w"].fill(0.0f);
  zm.params["pred.out.b"].fill(0.0f);
  const Tensor half = PredictAlphas(zm, h, exec);
  for (int t = 0; t < 6; ++t) CHECK(half[t] == doctest::Approx(0.5f));

  zm.params["pred.out.b"][0] = -40.0f;
  const Tensor low = PredictAlphas(zm, h, exec);
  for (int t = 0; t < 6; ++t) CHECK(low[t] < 1e-6f);

  const Tensor a = PredictAlphas(m, h, exec);
  for (int t = 0; t < 6; ++t) {
    CHECK(a[t] > 0.0f);
    CHECK(a[t] < 1.0f);
  }
}

TEST_CASE("decode_nar: shape, bidirectional attention, target independence") {
  const AsrConfig cfg = SmallConfig();
  Rng rng(17);
  AsrModel m = AsrModel::Init(cfg, rng);
  FloatExec exec;
  const Tensor hid = Encode(m, RandomFeatures(9, cfg.feat_dim, rng), exec);
  Tensor nobias({1, cfg.d_model});

  Tensor emb = RandomFeatures(1, cfg.d_model, rng);
  CHECK(DecodeNar(m, emb, hid, nobias, exec).dim(0) == 1);
  CHECK(DecodeNar(m, emb, hid, nobias, exec).dim(1) == cfg.vocab);

  // Mask probe: perturbing the LAST position must change the FIRST row's
  // logits — future positions are visible (no causal mask). The poke is
  // a single-channel bump (a constant shift across channels would be
  // cancelled exactly by layer norm).
  Tensor e5 = RandomFeatures(5, cfg.d_model, rng);
  const Tensor base = DecodeNar(m, e5, hid, nobias, exec);
  Tensor e5b = e5;
  e5b.at(4, 3) += 2.0f;
  const Tensor poked = DecodeNar(m, e5b, hid, nobias, exec);
  double delta = 0.0;
  for (int c = 0; c < cfg.vocab; ++c)
    delta += std::fabs(poked.at(0, c) - base.at(0, c));
  CHECK(delta > 1e-4);

  const Tensor again = DecodeNar(m, e5, hid, nobias, exec);
  for (int64_t i = 0; i < base.numel(); ++i) CHECK(base[i] == again[i]);
}

TEST_CASE("greedy_decode: argmax with low-id ties") {
  Tensor l({2, 2});
  l.at(0, 0) = 0.0f;
  l.at(0, 1) = 1.0f;
  l.at(1, 0) = 1.0f;
  l.at(1, 1) = 0.0f;
  CHECK(GreedyDecode(l) == std::vector<int>{1, 0});

  Tensor tie({1, 2});
  tie.at(0, 0) = 0.5f;
  tie.at(0, 1) = 0.5f;
  CHECK(GreedyDecode(tie) == std::vector<int>{0});

  Rng rng(3);
  Tensor r({20, 11});
  for (int64_t i = 0; i < r.numel(); ++i)
    r[i] = static_cast<float>(rng.normal());
  const std::vector<int> got = GreedyDecode(r);
  for (int i = 0; i < 20; ++i) {
    int best = 0;
    for (int c = 1; c < 11; ++c)
      if (r.at(i, c) > r.at(i, best)) best = c;
    CHECK(got[i] == best);
  }
}

TEST_CASE("glancing_sample: replacement rule") {
  const int n = 5, d = 4;
  Rng init(23);
  Tensor acoustic = RandomFeatures(n, d, init);
  Tensor table = RandomFeatures(8, d, init);
  const std::vector<int> target = {1, 2, 3, 4, 5};

  SUBCASE("d=0 keeps the input") {
    Rng rng(1);
    const Tensor out =
        GlancingSample(acoustic, target, target, table, 0.9f, rng);
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == acoustic[i]);
  }
  SUBCASE("d=2 lambda=0.5 replaces exactly one position") {
    const std::vector<int> first = {1, 2, 0, 0, 5};
    Rng rng(2);
    std::vector<uint8_t> mask;
    const Tensor out =
        GlancingSample(acoustic, first, target, table, 0.5f, rng, &mask);
    int replaced = 0;
    for (uint8_t b : mask) replaced += b;
    CHECK(replaced == 1);
    Rng rng2(2);
    std::vector<uint8_t> mask2;
    GlancingSample(acoustic, first, target, table, 0.5f, rng2, &mask2);
    CHECK(mask == mask2);  // seeded choice reproducible
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c)
        CHECK(out.at(i, c) ==
              (mask[i] ? table.at(target[i], c) : acoustic.at(i, c)));
  }
  SUBCASE("lambda=1 with all-wrong first pass replaces everything") {
    const std::vector<int> first = {0, 0, 0, 0, 0};
    Rng rng(3);
    const Tensor out =
        GlancingSample(acoustic, first, target, table, 1.0f, rng);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) CHECK(out.at(i, c) == table.at(target[i], c));
  }
  SUBCASE("length mismatch is rejected") {
    Rng rng(4);
    CHECK_THROWS(GlancingSample(acoustic, {1, 2}, target, table, 0.5f, rng));
  }
}

TEST_CASE("paraformer_loss: closed-form parts") {
  Tensor uniform({2, 4});  // equal logits -> CE = ln 4
  Tensor second({2, 4});
  Tensor alphas({3});
  alphas[0] = 1.0f;
  alphas[1] = 0.9f;
  alphas[2] = 0.5f;  // sum 2.4 vs N=2... see below
  const LossParts p = ParaformerLoss(uniform, second, alphas, {0, 3});
  CHECK(p.ce_first == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(p.ce_second == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(p.quantity == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(p.total ==
        doctest::Approx(2.0 * std::log(4.0) + 0.4).epsilon(1e-6));

  // Quantity arithmetic from the module contract: sum 2.4 against N=3.
  Tensor l3({3, 4});
  const LossParts q = ParaformerLoss(l3, l3, alphas, {0, 1, 2});
  CHECK(q.quantity == doctest::Approx(0.6).epsilon(1e-6));

  // Saturated one-hot logits with a matched quantity drive total to 0.
  Tensor hot({2, 4});
  hot.fill(-100.0f);
  hot.at(0, 1) = 100.0f;
  hot.at(1, 2) = 100.0f;
  Tensor a2({2});
  a2.fill(1.0f);
  const LossParts z = ParaformerLoss(hot, hot, a2, {1, 2});
  CHECK(z.total == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("upsample_alphas: length and range") {
  const AsrConfig cfg = SmallConfig();
  Rng rng(31);
  AsrModel m = AsrModel::Init(cfg, rng);
  FloatExec exec;

  const Tensor h3 = RandomFeatures(3, cfg.d_model, rng);
  const Tensor a2 = UpsampleAlphas(m, h3, exec);
  CHECK(a2.numel() == 3 * cfg.upsample_rate);
  for (int64_t i = 0; i < a2.numel(); ++i) {
    CHECK(a2[i] > 0.0f);
    CHECK(a2[i] < 1.0f);
  }

  AsrConfig c1 = cfg;
  c1.upsample_rate = 1;
  Rng rng1(31);
  AsrModel m1 = AsrModel::Init(c1, rng1);
  CHECK(UpsampleAlphas(m1, h3, exec).numel() == 3);
}

TEST_CASE("timestamps_from_alphas: hand trace, silence, partition property") {
  SUBCASE("two tokens at fires 1 and 3") {
    Tensor a({4});
    a.fill(0.5f);  // scaled to sum 2 -> fires at frames 1 and 3
    const TimestampOutput out = TimestampsFromAlphas(a, 2, 10, 0.0f);
    REQUIRE(out.spans.size() == 2);
    CHECK(out.spans[0].token_id == 0);
    CHECK(out.spans[0].start_ms == 0);
    CHECK(out.spans[0].end_ms == 20);
    CHECK(out.spans[1].start_ms == 20);
    CHECK(out.spans[1].end_ms == 40);
  }
  SUBCASE("no tokens -> all silence") {
    Tensor a({6});
    a.fill(0.2f);
    const TimestampOutput out = TimestampsFromAlphas(a, 0, 10, 0.1f);
    REQUIRE(out.spans.size() == 1);
    CHECK(out.spans[0].token_id == kSilenceId);
    CHECK(out.spans[0].start_ms == 0);
    CHECK(out.spans[0].end_ms == 60);
  }
  SUBCASE("low-weight edges become silence") {
    Tensor a({6});
    a[0] = 0.01f;
    a[1] = 0.01f;
    a[2] = 0.9f;
    a[3] = 0.9f;
    a[4] = 0.9f;
    a[5] = 0.01f;
    const TimestampOutput out = TimestampsFromAlphas(a, 1, 10, 0.05f);
    REQUIRE(out.spans.size() == 3);
    CHECK(out.spans[0].token_id == kSilenceId);
    CHECK(out.spans[0].end_ms == 20);
    CHECK(out.spans[1].token_id == 0);
    CHECK(out.spans[1].start_ms == 20);
    CHECK(out.spans[1].end_ms == 50);
    CHECK(out.spans[2].token_id == kSilenceId);
    CHECK(out.spans[2].start_ms == 50);
    CHECK(out.spans[2].end_ms == 60);
  }
  SUBCASE("zero weights with tokens requested is an error") {
    CHECK_THROWS(TimestampsFromAlphas(Tensor({5}), 2, 10, 0.1f));
  }
  SUBCASE("random cases partition the timeline") {
    Rng rng(67);
    for (int iter = 0; iter < 300; ++iter) {
      const int t = 2 + rng.uniform_int(60);
      const int n = rng.uniform_int(std::max(1, t / 2) + 1);
      Tensor a({t});
      float max_a = 0.0f;
      for (int i = 0; i < t; ++i) {
        a[i] = 0.02f + 0.9f * static_cast<float>(rng.uniform());
        max_a = std::max(max_a, a[i]);
      }
      const TimestampOutput out =
          TimestampsFromAlphas(a, n, 10, 0.08f * max_a);
      int cursor = 0;
      int tokens = 0;
      for (const TokenSpan& s : out.spans) {
        CHECK(s.start_ms == cursor);
        CHECK(s.end_ms > s.start_ms);
        cursor = s.end_ms;
        tokens += s.token_id != kSilenceId;
      }
      CHECK(cursor == t * 10);
      CHECK(tokens == n);
    }
  }
}

TEST_CASE("aas: hand arithmetic and shift property") {
  const std::vector<TokenSpan> pred = {{0, 0, 20}, {1, 20, 40}};
  Alignment same = {{0, 0, 2}, {1, 2, 4}};
  CHECK(Aas(pred, same, 10) == doctest::Approx(0.0));

  Alignment ref = {{0, 0, 3}, {1, 3, 4}};
  CHECK(Aas(pred, ref, 10) == doctest::Approx(5.0));  // (0+10+10+0)/4

  // Against an exactly aligned reference, a uniform +10 ms shift moves
  // every boundary error from 0 to 10.
  std::vector<TokenSpan> shifted = pred;
  for (TokenSpan& s : shifted) {
    s.start_ms += 10;
    s.end_ms += 10;
  }
  CHECK(Aas(shifted, same, 10) == doctest::Approx(10.0));

  Alignment with_sil = {{kSilenceId, 0, 1}, {0, 1, 2}, {1, 2, 4}};
  CHECK_NOTHROW(Aas(pred, with_sil, 10));
  CHECK_THROWS(Aas(pred, Alignment{{0, 0, 2}}, 10));
}
