// tinyasr/tests/test_pipeline.cpp
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

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "tinyasr/pipeline.h"

using namespace tinyasr;

namespace {

// Memoized recursive edit distance; an independent formulation of the
// same metric used as an oracle for the iterative implementation.
int LevOracle(const std::vector<int>& a, const std::vector<int>& b, size_t i,
              size_t j, std::map<std::pair<size_t, size_t>, int>& memo) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  int best = LevOracle(a, b, i + 1, j + 1, memo) + (a[i] == b[j] ? 0 : 1);
  best = std::min(best, LevOracle(a, b, i + 1, j, memo) + 1);
  best = std::min(best, LevOracle(a, b, i, j + 1, memo) + 1);
  memo[key] = best;
  return best;
}

ModelBundle SmallBundle(uint64_t seed) {
  ModelBundle b;
  b.asr.cfg.vocab = 12;
  b.asr.cfg.d_model = 16;
  b.asr.cfg.n_enc_layers = 1;
  b.asr.cfg.n_dec_layers = 1;
  b.asr.cfg.n_heads = 2;
  b.asr.cfg.d_ffn = 32;
  b.asr.cfg.feat_dim = 20;
  b.asr.cfg.ts_hidden = 8;
  b.vad.cfg.feat_dim = 20;
  b.vad.cfg.hidden = 8;
  b.punct.cfg.vocab = 12;
  b.punct.cfg.d_model = 16;
  b.punct.cfg.n_layers = 1;
  b.punct.cfg.n_heads = 2;
  b.punct.cfg.d_ffn = 32;
  Rng rng(seed);
  b.asr = AsrModel::Init(b.asr.cfg, rng);
  b.vad = VadModel::Init(b.vad.cfg, rng);
  b.punct = PunctModel::Init(b.punct.cfg, rng);
  return b;
}

// VAD that always reports speech: zero weights, biased output head.
void MakeAlwaysSpeech(VadModel* vad) {
  for (auto& [name, p] : vad->params) p.fill(0.0f);
  vad->params["vad.out.b"][0] = -8.0f;  // silence unit
  vad->params["vad.out.b"][1] = 8.0f;
}

void MakeNeverSpeech(VadModel* vad) {
  for (auto& [name, p] : vad->params) p.fill(0.0f);  // probs land at 0.5
}

std::vector<int16_t> NoisyAudio(int n, Rng& rng) {
  std::vector<int16_t> pcm(static_cast<size_t>(n));
  for (int16_t& s : pcm)
    s = static_cast<int16_t>(3000.0 * rng.normal());
  return pcm;
}

}  // namespace

TEST_CASE("compute_cer: closed forms and oracle") {
  CHECK(ComputeCer({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
  CHECK(ComputeCer({1, 2, 3}, {1, 2, 4}) == doctest::Approx(1.0 / 3.0));
  CHECK(ComputeCer({1, 2, 3}, {}) == doctest::Approx(1.0));
  CHECK(ComputeCer({5}, {5, 6, 7}) == doctest::Approx(2.0));
  CHECK_THROWS(ComputeCer({}, {1}));

  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(static_cast<size_t>(rng.uniform_int(12)) + 1);
    std::vector<int> b(static_cast<size_t>(rng.uniform_int(13)));
    for (int& x : a) x = rng.uniform_int(4);
    for (int& x : b) x = rng.uniform_int(4);
    std::map<std::pair<size_t, size_t>, int> memo;
    const int dist = LevOracle(a, b, 0, 0, memo);
    CHECK(ComputeCer(a, b) ==
          doctest::Approx(static_cast<double>(dist) / a.size()));
  }
}

TEST_CASE("model bundle: save/load round-trip is bit-exact") {
  const ModelBundle orig = SmallBundle(0xfeed);
  const std::string dir = "bundle_rt_test";
  REQUIRE(std::system(("mkdir -p " + dir).c_str()) == 0);
  SaveBundle(orig, dir);
  const ModelBundle back = LoadBundle(dir);

  auto compare = [](const std::map<std::string, Tensor>& a,
                    const std::map<std::string, Tensor>& b) {
    REQUIRE(a.size() == b.size());
    for (const auto& [name, t] : a) {
      REQUIRE(b.count(name) == 1);
      const Tensor& u = b.at(name);
      REQUIRE(t.shape() == u.shape());
      for (int64_t i = 0; i < t.numel(); ++i) CHECK(t[i] == u[i]);
    }
  };
  compare(orig.asr.params, back.asr.params);
  compare(orig.vad.params, back.vad.params);
  compare(orig.punct.params, back.punct.params);
  CHECK(back.asr.cfg.d_model == orig.asr.cfg.d_model);
  CHECK(back.asr.cfg.silence_frac == orig.asr.cfg.silence_frac);
  CHECK(back.vad.cfg.hidden == orig.vad.cfg.hidden);
  CHECK(back.punct.cfg.l_future == orig.punct.cfg.l_future);
}

TEST_CASE("model files: magic, version, truncation errors") {
  const std::string path = "model_io_err_test.pflw";
  {
    std::ofstream f(path, std::ios::binary);
    f << "JUNKJUNKJUNK";
  }
  CHECK_THROWS_WITH_AS(LoadTensors(path),
                       doctest::Contains("not a model file"),
                       std::runtime_error);

  // A valid file cut short must fail cleanly.
  std::map<std::string, Tensor> tensors;
  Rng rng(1);
  Tensor t({4, 5});
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.normal());
  tensors["w"] = t;
  SaveTensors(path, tensors);
  {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 9));
  }
  CHECK_THROWS_WITH_AS(LoadTensors(path),
                       doctest::Contains("truncated tensor data"),
                       std::runtime_error);

  // Unsupported version.
  {
    std::ofstream f(path, std::ios::binary);
    const uint32_t version = 9, count = 0;
    f << "PFLW";
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&count), 4);
  }
  CHECK_THROWS_WITH_AS(LoadTensors(path), doctest::Contains("version"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("pipeline: silence-only VAD yields an empty transcript") {
  ModelBundle bundle = SmallBundle(2);
  MakeNeverSpeech(&bundle.vad);
  Rng rng(5);
  const std::vector<int16_t> pcm = NoisyAudio(16000, rng);  // 1 s
  FloatExec exec;
  const Transcript t =
      RunPipeline(pcm, 16000, bundle, {}, VadConfig{}, exec);
  CHECK(t.segments.empty());
  CHECK(TranscriptToJson(t) == "{\n  \"segments\": []\n}");
}

TEST_CASE("pipeline: structure, invariants, determinism") {
  ModelBundle bundle = SmallBundle(3);
  MakeAlwaysSpeech(&bundle.vad);
  Rng rng(6);
  const std::vector<int16_t> pcm = NoisyAudio(2 * 16000, rng);
  FloatExec exec;
  std::map<std::string, double> stages;
  const Transcript t =
      RunPipeline(pcm, 16000, bundle, {{1, 2}}, VadConfig{}, exec, &stages);

  REQUIRE(t.segments.size() == 1);
  const TranscriptSegment& seg = t.segments[0];
  CHECK(seg.start_ms == 0);
  CHECK(seg.end_ms == 1980);  // 198 full analysis windows
  CHECK(!seg.tokens.empty());
  int prev_end = seg.start_ms;
  for (const TokenSpan& tok : seg.tokens) {
    CHECK(tok.start_ms >= prev_end);      // monotonic, non-overlapping
    CHECK(tok.end_ms > tok.start_ms);
    CHECK(tok.start_ms >= seg.start_ms);  // inside the segment
    CHECK(tok.end_ms <= seg.end_ms);
    CHECK(tok.token_id >= 0);
    CHECK(tok.token_id < bundle.asr.cfg.vocab);
    prev_end = tok.end_ms;
  }
  CHECK(!seg.raw_text.empty());

  for (const char* stage : {"features", "vad", "asr", "punct"}) {
    REQUIRE(stages.count(stage) == 1);
    CHECK(stages.at(stage) >= 0.0);
  }

  // Two runs produce byte-identical transcripts.
  const Transcript t2 =
      RunPipeline(pcm, 16000, bundle, {{1, 2}}, VadConfig{}, exec);
  CHECK(TranscriptToJson(t) == TranscriptToJson(t2));

  // The JSON parses back with the documented schema.
  const auto parsed = nlohmann::json::parse(TranscriptToJson(t));
  REQUIRE(parsed["segments"].size() == 1);
  CHECK(parsed["segments"][0]["start_ms"] == 0);
  CHECK(parsed["segments"][0]["end_ms"] == 1980);
  CHECK(parsed["segments"][0]["tokens"].size() == seg.tokens.size());
  CHECK(parsed["segments"][0]["tokens"][0]["token"].is_string());
}

TEST_CASE("pipeline: precision plumbing") {
  ModelBundle bundle = SmallBundle(4);
  MakeAlwaysSpeech(&bundle.vad);
  Rng rng(7);
  const std::vector<int16_t> pcm = NoisyAudio(16000, rng);

  FbankConfig fb;
  fb.n_mels = bundle.asr.cfg.feat_dim;
  const Tensor calib = Fbank(pcm, 16000, fb).frames;

  CHECK(ParsePrecision("f32") == Precision::kF32);
  CHECK(ParsePrecision("int8") == Precision::kInt8);
  CHECK(ParsePrecision("amp") == Precision::kAmp);
  CHECK_THROWS(ParsePrecision("fp16"));

  // f32 exec output matches a plain FloatExec run exactly.
  AmpPlan plan;
  auto f32 = MakeExec(bundle.asr, Precision::kF32, calib, 30.0, &plan);
  FloatExec ref;
  const Transcript a = RunPipeline(pcm, 16000, bundle, {}, VadConfig{}, *f32);
  const Transcript b = RunPipeline(pcm, 16000, bundle, {}, VadConfig{}, ref);
  CHECK(TranscriptToJson(a) == TranscriptToJson(b));
  for (const auto& [name, layer] : plan.layers)
    CHECK(layer.decision == LayerPrecision::kFloat32);

  // AMP with an impossible threshold also degenerates to pure float.
  auto amp = MakeExec(bundle.asr, Precision::kAmp, calib, 1e9, &plan);
  const Transcript c = RunPipeline(pcm, 16000, bundle, {}, VadConfig{}, *amp);
  CHECK(TranscriptToJson(c) == TranscriptToJson(b));

  // INT8 runs and produces a structurally valid transcript.
  auto int8 = MakeExec(bundle.asr, Precision::kInt8, calib, 30.0, &plan);
  const Transcript d = RunPipeline(pcm, 16000, bundle, {}, VadConfig{}, *int8);
  REQUIRE(d.segments.size() == 1);
  CHECK(!d.segments[0].tokens.empty());
}

TEST_CASE("recognize_segment: empty features give an empty result") {
  const ModelBundle bundle = SmallBundle(8);
  FloatExec exec;
  const Tensor hw = EmbedHotwords(bundle.asr, {});
  const SegmentRecognition rec = RecognizeSegment(
      bundle.asr, Tensor({0, bundle.asr.cfg.feat_dim}), hw, exec);
  CHECK(rec.tokens.empty());
  CHECK(rec.spans.empty());
}
