// tinyasr/vad.h
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

#ifndef TINYASR_VAD_H_
#define TINYASR_VAD_H_

// Voice activity detection: an FSMN-style frame scorer plus a streaming
// post-processing state machine that turns per-frame speech probabilities
// into speech segments.
//
// The state machine uses a single probability threshold with duration
// hysteresis: SPEECH starts after min_speech_ms consecutive frames above
// the threshold (the segment start is backdated to the run's first frame
// minus pad_ms) and ends after more than max_silence_in_speech_ms below it
// (segment end = last above-threshold frame plus pad_ms). Overlong
// segments are force-split at the lowest-probability frame in the trailing
// second. Segments never overlap; for total speech duration to be
// monotone non-increasing in the threshold, configs should keep
// max_silence_in_speech_ms >= 2 * pad_ms (the defaults do).

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "tinyasr/tensor.h"

namespace tinyasr {

struct VadConfig {
  float speech_threshold = 0.5f;
  int smooth_window = 5;  // centered moving average, odd, 1 = no smoothing
  int min_speech_ms = 100;
  int max_silence_in_speech_ms = 300;
  int max_segment_ms = 15000;
  int pad_ms = 100;
  int frame_shift_ms = 10;
};

struct Segment {
  int start_ms = 0;
  int end_ms = 0;        // exclusive; end_ms > start_ms
  float mean_score = 0;  // mean smoothed probability over the speech run
};

// Two-unit scorer (silence, speech). An n-monophone head would sum the
// non-silence posteriors; two units keep the toy task honest.
struct VadNetConfig {
  int feat_dim = 80;
  int hidden = 32;
  int l_taps = 4;  // past memory taps
  int r_taps = 2;  // future memory taps
  int n_units = 2;
};

struct VadModel {
  VadNetConfig cfg;
  std::map<std::string, Tensor> params;

  static VadModel Init(const VadNetConfig& cfg, Rng& rng);
  const Tensor& P(const std::string& name) const;
};

// features [T x feat_dim] -> speech probabilities, length T. The memory
// block is a per-channel convolution over l_taps past and r_taps future
// hidden frames with an identity skip; out-of-range frames read as zero.
Tensor ScoreFrames(const VadModel& m, const Tensor& features);

// Centered moving average with edge truncation (the effective window
// shrinks near the boundaries). window must be odd and >= 1.
Tensor SmoothProbs(const Tensor& probs, int window);

// Streaming segmenter. One instance per stream; instances are not
// shareable across threads, but distinct streams may run in parallel.
// Push() accepts raw (unsmoothed) probabilities in chunks of any size and
// returns segments completed so far; Finalize() flushes the smoothing
// buffer, closes an open speech run at the stream end, and is a no-op when
// called again. Results are identical for every chunking of the same
// probability sequence.
class VadStream {
 public:
  explicit VadStream(const VadConfig& cfg);

  std::vector<Segment> Push(const float* probs, int n);
  std::vector<Segment> Push(const Tensor& probs);  // flat [T]
  std::vector<Segment> Finalize();

 private:
  void Consume(float p, std::vector<Segment>* out);
  void CloseSegment(int end_ms, int last_prob_frame, std::vector<Segment>* out);

  VadConfig cfg_;
  // smoothing
  std::deque<float> raw_;   // frames [raw_base_, total_pushed_)
  int64_t raw_base_ = 0;
  int64_t next_smooth_ = 0;
  int64_t total_pushed_ = 0;
  bool finalized_ = false;
  // hysteresis
  enum class Mode { kSilence, kSpeech };
  Mode mode_ = Mode::kSilence;
  int64_t run_start_ = -1;   // first frame of the current above-threshold run
  int64_t last_above_ = -1;  // last above-threshold frame of the open segment
  int64_t below_run_ = 0;    // consecutive below-threshold frames in SPEECH
  int seg_start_ms_ = 0;
  int prev_end_ms_ = 0;           // emitted segments never overlap
  std::deque<float> seg_probs_;   // probs since seg_frame0_
  int64_t seg_frame0_ = 0;
};

// Offline convenience: push everything, finalize.
std::vector<Segment> SegmentProbs(const Tensor& probs, const VadConfig& cfg);

}  // namespace tinyasr

#endif  // TINYASR_VAD_H_
