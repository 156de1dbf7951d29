// tinyasr/pipeline.cpp
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

#include "tinyasr/pipeline.h"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "json.hpp"
#include "tinyasr/cif.h"
#include "tinyasr/wav.h"

namespace tinyasr {

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>* sink) : sink_(sink) {}

  void Mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    if (sink_ != nullptr && !current_.empty())
      (*sink_)[current_] += std::chrono::duration<double>(now - last_).count();
    current_ = stage;
    last_ = now;
  }
  void Stop() { Mark(""); }

 private:
  std::map<std::string, double>* sink_;
  std::string current_;
  std::chrono::steady_clock::time_point last_;
};

std::string JoinIds(const std::vector<int>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

Precision ParsePrecision(const std::string& s) {
  if (s == "f32") return Precision::kF32;
  if (s == "int8") return Precision::kInt8;
  if (s == "amp") return Precision::kAmp;
  throw std::runtime_error("precision must be f32, int8, or amp: " + s);
}

SegmentRecognition RecognizeSegment(const AsrModel& m, const Tensor& feats,
                                    const Tensor& hotword_emb,
                                    LinearExec& exec) {
  SegmentRecognition out;
  if (feats.dim(0) == 0) return out;

  const Tensor hidden = Encode(m, feats, exec);
  const Tensor alphas = PredictAlphas(m, hidden, exec);
  const cif::Result fired =
      cif::integrate(hidden, alphas, m.cfg.cif_threshold);
  if (fired.n_tokens == 0) return out;

  const Tensor logits =
      DecodeNar(m, fired.embeddings, hidden, hotword_emb, exec);
  out.tokens = GreedyDecode(logits);

  const Tensor alphas2 = UpsampleAlphas(m, hidden, exec);
  const int shift_after_lfr = m.cfg.frame_shift_ms;
  Check(shift_after_lfr % m.cfg.upsample_rate == 0,
        "pipeline: upsample rate must divide the frame shift");
  float max_a2 = 0.0f;
  for (int64_t i = 0; i < alphas2.numel(); ++i)
    max_a2 = std::max(max_a2, alphas2[i]);
  const TimestampOutput ts = TimestampsFromAlphas(
      alphas2, fired.n_tokens, shift_after_lfr / m.cfg.upsample_rate,
      m.cfg.silence_frac * max_a2);
  // Non-silence spans carry the token index; map them to vocabulary ids.
  out.spans = ts.spans;
  for (TokenSpan& s : out.spans)
    if (s.token_id != kSilenceId)
      s.token_id = out.tokens[static_cast<size_t>(s.token_id)];
  return out;
}

Transcript RunPipeline(const std::vector<int16_t>& pcm, int sample_rate,
                       const ModelBundle& bundle, const HotwordList& hotwords,
                       const VadConfig& vad_cfg, LinearExec& exec,
                       std::map<std::string, double>* stage_seconds) {
  const AsrModel& asr = bundle.asr;
  StageTimer timer(stage_seconds);

  timer.Mark("features");
  FbankConfig fb;
  fb.n_mels = bundle.vad.cfg.feat_dim;
  Check(fb.n_mels == asr.cfg.feat_dim,
        "pipeline: VAD and ASR feature dims differ");
  fb.frame_shift_ms = vad_cfg.frame_shift_ms;
  const FeatureFrames feats = Fbank(pcm, sample_rate, fb);
  const int n_frames = feats.frames.dim(0);

  timer.Mark("vad");
  const Tensor probs = ScoreFrames(bundle.vad, feats.frames);
  const std::vector<Segment> segments = SegmentProbs(probs, vad_cfg);

  timer.Mark("asr");
  const Tensor hotword_emb = EmbedHotwords(asr, hotwords);
  Transcript transcript;
  std::vector<std::vector<int>> seg_tokens;
  for (const Segment& seg : segments) {
    const int f0 = std::clamp(seg.start_ms / vad_cfg.frame_shift_ms, 0,
                              n_frames);
    const int f1 = std::clamp(seg.end_ms / vad_cfg.frame_shift_ms, f0,
                              n_frames);
    Tensor slice({f1 - f0, feats.frames.dim(1)});
    for (int f = f0; f < f1; ++f)
      for (int c = 0; c < slice.dim(1); ++c)
        slice.at(f - f0, c) = feats.frames.at(f, c);
    FeatureFrames seg_feats;
    seg_feats.frames = std::move(slice);
    seg_feats.frame_shift_ms = feats.frame_shift_ms;
    if (asr.cfg.lfr_m > 1 || asr.cfg.lfr_n > 1)
      seg_feats = LfrStack(seg_feats, asr.cfg.lfr_m, asr.cfg.lfr_n);

    const SegmentRecognition rec =
        RecognizeSegment(asr, seg_feats.frames, hotword_emb, exec);

    TranscriptSegment ts;
    ts.start_ms = seg.start_ms;
    ts.end_ms = seg.end_ms;
    const int offset = f0 * vad_cfg.frame_shift_ms;
    for (const TokenSpan& s : rec.spans) {
      if (s.token_id == kSilenceId) continue;
      ts.tokens.push_back(
          {s.token_id, s.start_ms + offset, s.end_ms + offset});
    }
    ts.raw_text = JoinIds(rec.tokens);
    transcript.segments.push_back(std::move(ts));
    seg_tokens.push_back(rec.tokens);
  }

  timer.Mark("punct");
  PunctStream stream(&bundle.punct);
  std::vector<CommittedToken> commits;
  for (const std::vector<int>& toks : seg_tokens) {
    const auto c = stream.Push(toks);
    commits.insert(commits.end(), c.begin(), c.end());
  }
  const auto tail = stream.Finalize();
  commits.insert(commits.end(), tail.begin(), tail.end());
  // Commits arrive in stream order, so they split at segment boundaries.
  size_t cursor = 0;
  for (size_t s = 0; s < seg_tokens.size(); ++s) {
    std::vector<RenderItem> items;
    for (size_t i = 0; i < seg_tokens[s].size(); ++i, ++cursor) {
      const CommittedToken& c = commits[cursor];
      items.push_back({std::to_string(c.token), c.punct, c.tag});
    }
    transcript.segments[s].punctuated_text = RenderText(items);
  }
  timer.Stop();
  return transcript;
}

double ComputeCer(const std::vector<int>& ref, const std::vector<int>& hyp) {
  Check(!ref.empty(), "cer: empty reference");
  const size_t n = ref.size(), m = hyp.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(n);
}

std::string TranscriptToJson(const Transcript& t) {
  nlohmann::json root;
  root["segments"] = nlohmann::json::array();
  for (const TranscriptSegment& seg : t.segments) {
    nlohmann::json js;
    js["start_ms"] = seg.start_ms;
    js["end_ms"] = seg.end_ms;
    js["text"] = seg.raw_text;
    js["punctuated_text"] = seg.punctuated_text;
    js["tokens"] = nlohmann::json::array();
    for (const TokenSpan& tok : seg.tokens) {
      nlohmann::json jt;
      jt["token"] = std::to_string(tok.token_id);
      jt["start_ms"] = tok.start_ms;
      jt["end_ms"] = tok.end_ms;
      js["tokens"].push_back(jt);
    }
    root["segments"].push_back(js);
  }
  return root.dump(2);
}

AmpPlan CalibrateAmp(const AsrModel& m, const Tensor& calib_feats,
                     double sqnr_threshold_db) {
  Check(calib_feats.dim(0) >= 3, "amp: calibration batch too small");
  return AmpSelect(
      m,
      [&](LinearExec& exec) {
        const Tensor hidden = Encode(m, calib_feats, exec);
        (void)PredictAlphas(m, hidden, exec);
        (void)UpsampleAlphas(m, hidden, exec);
        // A short decode over embedding rows exercises the decoder and
        // contextual layers even if CIF would fire nothing here.
        const int n = std::min(4, m.cfg.vocab);
        Tensor emb({n, m.cfg.d_model});
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < m.cfg.d_model; ++c)
            emb.at(i, c) = m.P("dec.embed").at(i, c);
        const Tensor hw = EmbedHotwords(m, {{0}});
        (void)DecodeNar(m, emb, hidden, hw, exec);
      },
      sqnr_threshold_db);
}

std::unique_ptr<LinearExec> MakeExec(const AsrModel& m, Precision precision,
                                     const Tensor& calib_feats,
                                     double sqnr_threshold_db,
                                     AmpPlan* plan_out) {
  AmpPlan plan;
  switch (precision) {
    case Precision::kF32:
      plan = AllFloatPlan(m);
      if (plan_out != nullptr) *plan_out = plan;
      return std::make_unique<FloatExec>();
    case Precision::kInt8:
      plan = AllInt8Plan(m);
      break;
    case Precision::kAmp:
      plan = CalibrateAmp(m, calib_feats, sqnr_threshold_db);
      break;
  }
  if (plan_out != nullptr) *plan_out = plan;
  return std::make_unique<QuantExec>(m, plan);
}

BenchReport BenchRtf(const ModelBundle& bundle,
                     const std::vector<std::string>& wav_paths,
                     Precision precision, double sqnr_threshold_db,
                     const VadConfig& vad_cfg,
                     std::vector<Transcript>* transcripts) {
  Check(!wav_paths.empty(), "bench: no input files");
  BenchReport report;

  // AMP calibration uses the first file; calibration cost is not billed
  // to the benchmark, matching the usual offline-quantization setup.
  Tensor calib({0});
  if (precision == Precision::kAmp) {
    const WavData wav = ReadWav(wav_paths.front());
    FbankConfig fb;
    fb.n_mels = bundle.asr.cfg.feat_dim;
    calib = Fbank(wav.samples, wav.sample_rate, fb).frames;
  }
  const std::unique_ptr<LinearExec> exec =
      MakeExec(bundle.asr, precision, calib, sqnr_threshold_db);

  for (const std::string& path : wav_paths) {
    const WavData wav = ReadWav(path);
    report.audio_seconds +=
        static_cast<double>(wav.samples.size()) / wav.sample_rate;
    const auto t0 = std::chrono::steady_clock::now();
    Transcript t = RunPipeline(wav.samples, wav.sample_rate, bundle, {},
                               vad_cfg, *exec, &report.stage_seconds);
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_seconds += std::chrono::duration<double>(t1 - t0).count();
    if (transcripts != nullptr) transcripts->push_back(std::move(t));
  }
  Check(report.audio_seconds > 0.0, "bench: empty audio");
  report.rtf = report.wall_seconds / report.audio_seconds;
  return report;
}

}  // namespace tinyasr
