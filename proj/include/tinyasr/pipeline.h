// tinyasr/pipeline.h
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

#ifndef TINYASR_PIPELINE_H_
#define TINYASR_PIPELINE_H_

// Runtime orchestration: VAD -> per-segment recognition with hotword
// biasing -> token timestamps offset to absolute time -> streaming
// punctuation applied across segments with one persistent stream (so a
// sentence may span a VAD gap).

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tinyasr/contextual.h"
#include "tinyasr/features.h"
#include "tinyasr/model_io.h"
#include "tinyasr/paraformer.h"
#include "tinyasr/punct.h"
#include "tinyasr/quant.h"
#include "tinyasr/vad.h"

namespace tinyasr {

enum class Precision { kF32, kInt8, kAmp };

Precision ParsePrecision(const std::string& s);  // "f32" | "int8" | "amp"

struct TranscriptSegment {
  int start_ms = 0;
  int end_ms = 0;
  std::vector<TokenSpan> tokens;  // absolute times, silence spans dropped;
                                  // token_id is the vocabulary id
  std::string raw_text;           // space-joined token ids
  std::string punctuated_text;
};

struct Transcript {
  std::vector<TranscriptSegment> segments;
};

struct SegmentRecognition {
  std::vector<int> tokens;
  std::vector<TokenSpan> spans;  // segment-relative, silence included
};

// Recognizes one feature slice: encode, integrate-and-fire, one decoder
// pass with hotword biasing, timestamps. Empty result when CIF fires no
// token.
SegmentRecognition RecognizeSegment(const AsrModel& m, const Tensor& feats,
                                    const Tensor& hotword_emb,
                                    LinearExec& exec);

// Full runtime path over one PCM stream. `stage_seconds`, if given,
// accumulates wall-clock per stage ("features", "vad", "asr", "punct").
Transcript RunPipeline(const std::vector<int16_t>& pcm, int sample_rate,
                       const ModelBundle& bundle, const HotwordList& hotwords,
                       const VadConfig& vad_cfg, LinearExec& exec,
                       std::map<std::string, double>* stage_seconds = nullptr);

// Levenshtein distance (unit costs) divided by len(ref); ref non-empty.
double ComputeCer(const std::vector<int>& ref, const std::vector<int>& hyp);

// The stable public schema:
// {"segments":[{"start_ms":..,"end_ms":..,"text":..,"punctuated_text":..,
//   "tokens":[{"token":..,"start_ms":..,"end_ms":..}]}]}
std::string TranscriptToJson(const Transcript& t);

// AMP calibration via a forward pass that exercises every linear layer.
AmpPlan CalibrateAmp(const AsrModel& m, const Tensor& calib_feats,
                     double sqnr_threshold_db);

// Executor for the requested precision; `calib_feats` is only used for
// kAmp. Returns the plan actually applied through `plan_out` if non-null.
std::unique_ptr<LinearExec> MakeExec(const AsrModel& m, Precision precision,
                                     const Tensor& calib_feats,
                                     double sqnr_threshold_db,
                                     AmpPlan* plan_out = nullptr);

// Single-thread batch-1 wall-clock over the full pipeline for each file;
// rtf = wall_seconds / audio_seconds. Transcripts are returned through
// `transcripts` if non-null (one per file, in order).
BenchReport BenchRtf(const ModelBundle& bundle,
                     const std::vector<std::string>& wav_paths,
                     Precision precision, double sqnr_threshold_db,
                     const VadConfig& vad_cfg,
                     std::vector<Transcript>* transcripts = nullptr);

}  // namespace tinyasr

#endif  // TINYASR_PIPELINE_H_
