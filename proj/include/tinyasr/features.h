// tinyasr/features.h
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

#ifndef TINYASR_FEATURES_H_
#define TINYASR_FEATURES_H_

// Acoustic front end and synthetic-corpus generator.
//
// The toy vocabulary is grounded in audio: every token has a fixed pair of
// sine frequencies (multiples of 100 Hz, disjoint across tokens), and its
// log-mel template is the steady-state fbank frame of that signal. Because
// 100 Hz divides the 10 ms frame shift, a sustained token produces
// bit-identical interior frames, so features synthesized directly from the
// templates and features computed from rendered PCM agree.

#include <cstdint>
#include <vector>

#include "tinyasr/tensor.h"

namespace tinyasr {

struct FbankConfig {
  int frame_length_ms = 25;
  int frame_shift_ms = 10;
  int n_mels = 80;
  float preemphasis = 0.97f;
  bool mean_normalize = false;
};

struct FeatureFrames {
  Tensor frames;  // T x D
  int frame_shift_ms = 10;
  int frame_length_ms = 25;
};

// Silence spans carry this token id in alignments.
constexpr int kSilenceId = -1;

struct AlignSpan {
  int token_id = 0;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
};
using Alignment = std::vector<AlignSpan>;

// Log-mel filterbank. Empty audio yields zero frames; sample rates other
// than 8 kHz / 16 kHz are rejected.
FeatureFrames Fbank(const std::vector<int16_t>& pcm, int sample_rate,
                    const FbankConfig& cfg = {});

// Low-frame-rate stacking: window m frames (edge-padded by repeating the
// last frame), hop n. Output length is ceil(T/n) with dimension m*D.
FeatureFrames LfrStack(const FeatureFrames& in, int m, int n);

struct SynthConfig {
  int vocab = 32;
  int sample_rate = 16000;
  int d_min = 4;  // per-token duration range, frames
  int d_max = 8;
  float noise_sigma = 0.05f;
  float silence_prob = 0.0f;  // chance of a silence gap before each token
  int silence_min = 3;        // silence duration range, frames
  int silence_max = 8;
  uint64_t template_seed = 0x7105eedULL;
  // The last n_confusable ids form consecutive pairs whose renderings are
  // acoustic mixtures, controlled by a mixing weight lambda in
  // [morph_lo, morph_hi): lambda = 1 is the pure token, lambda = 0.5 is
  // maximally ambiguous with its partner.
  int n_confusable = 6;
  float morph_lo = 1.0f;
  float morph_hi = 1.0f;
};

// Frozen per-vocabulary acoustics: tone frequencies and their fbank
// templates. Built deterministically from cfg.template_seed.
struct TokenBank {
  Tensor templates;            // V x n_mels, log-mel steady-state frames
  Tensor silence;              // 1 x n_mels
  std::vector<float> freq_hz;  // 2 entries per token
  int sample_rate = 16000;
  int n_mels = 80;

  // Partner id inside a confusable pair, or -1.
  int Partner(int id, const SynthConfig& cfg) const;
};

TokenBank MakeTokenBank(const SynthConfig& cfg);

// Power-domain mixture of two log-mel templates; models what Fbank sees
// when the two tokens' tones are mixed with amplitudes lambda / 1-lambda.
Tensor MorphTemplate(const TokenBank& bank, int id_a, int id_b, float lambda);

struct SynthResult {
  FeatureFrames feats;
  Alignment align;             // includes kSilenceId spans
  std::vector<float> lambdas;  // one per token (1.0 for non-confusable)
};

// Renders a token sequence as template frames plus Gaussian noise.
// Durations, silence gaps, and mixing weights are drawn from rng.
SynthResult SynthGenerate(const std::vector<int>& tokens, Rng& rng,
                          const SynthConfig& cfg, const TokenBank& bank);

// Renders the same alignment as PCM so WAV-path features match the
// synthesized ones (up to token-boundary transition frames). `lambdas`
// holds one mixing weight per non-silence span, in order.
std::vector<int16_t> RenderAudio(const Alignment& align,
                                 const std::vector<float>& lambdas,
                                 const SynthConfig& cfg,
                                 const TokenBank& bank);

}  // namespace tinyasr

#endif  // TINYASR_FEATURES_H_
