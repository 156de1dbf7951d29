// tinyasr/vad.cpp
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

#include "tinyasr/vad.h"

#include <algorithm>
#include <cmath>

#include "tinyasr/kernels.h"

namespace tinyasr {

using namespace kernels;  // NOLINT

VadModel VadModel::Init(const VadNetConfig& cfg, Rng& rng) {
  VadModel m;
  m.cfg = cfg;
  auto mat = [&](const std::string& name, std::vector<int> shape) {
    Tensor w(shape);
    const float std_dev = 1.0f / std::sqrt(static_cast<float>(shape.back()));
    for (int64_t i = 0; i < w.numel(); ++i)
      w[i] = std_dev * static_cast<float>(rng.normal());
    m.params[name] = std::move(w);
  };
  mat("vad.in.w", {cfg.hidden, cfg.feat_dim});
  m.params["vad.in.b"] = Tensor({cfg.hidden});
  mat("vad.mem.w", {cfg.l_taps + cfg.r_taps + 1, cfg.hidden});
  mat("vad.out.w", {cfg.n_units, cfg.hidden});
  m.params["vad.out.b"] = Tensor({cfg.n_units});
  return m;
}

const Tensor& VadModel::P(const std::string& name) const {
  auto it = params.find(name);
  Check(it != params.end(), "vad: unknown parameter " + name);
  return it->second;
}

Tensor ScoreFrames(const VadModel& m, const Tensor& features) {
  const int t = features.dim(0);
  const int h_dim = m.cfg.hidden;
  Check(features.dim(1) == m.cfg.feat_dim, "vad: feature dim mismatch");
  if (t == 0) return Tensor({0});

  const Tensor h = relu(linear(features, m.P("vad.in.w"), m.P("vad.in.b")));
  // Memory block: per-channel taps over past/future frames plus an
  // identity skip; frames outside the sequence contribute zero.
  const Tensor& taps = m.P("vad.mem.w");
  Tensor mem({t, h_dim});
  for (int f = 0; f < t; ++f) {
    for (int k = 0; k < taps.dim(0); ++k) {
      const int src = f + k - m.cfg.l_taps;
      if (src < 0 || src >= t) continue;
      for (int c = 0; c < h_dim; ++c)
        mem.at(f, c) += taps.at(k, c) * h.at(src, c);
    }
    for (int c = 0; c < h_dim; ++c) mem.at(f, c) += h.at(f, c);
  }
  const Tensor post =
      softmax(linear(relu(mem), m.P("vad.out.w"), m.P("vad.out.b")));
  Tensor probs({t});
  for (int f = 0; f < t; ++f) probs[f] = 1.0f - post.at(f, 0);  // unit 0: sil
  return probs;
}

Tensor SmoothProbs(const Tensor& probs, int window) {
  Check(window >= 1 && window % 2 == 1, "vad: smooth window must be odd");
  const int t = static_cast<int>(probs.numel());
  const int r = window / 2;
  Tensor out({t});
  for (int i = 0; i < t; ++i) {
    const int lo = std::max(0, i - r), hi = std::min(t - 1, i + r);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += probs[j];
    out[i] = static_cast<float>(sum / (hi - lo + 1));
  }
  return out;
}

VadStream::VadStream(const VadConfig& cfg) : cfg_(cfg) {
  Check(cfg.speech_threshold > 0.0f && cfg.speech_threshold < 1.0f,
        "vad: threshold must be in (0,1)");
  Check(cfg.smooth_window >= 1 && cfg.smooth_window % 2 == 1,
        "vad: smooth window must be odd");
  Check(cfg.frame_shift_ms > 0, "vad: frame shift must be positive");
  Check(cfg.min_speech_ms > 0 && cfg.min_speech_ms % cfg.frame_shift_ms == 0,
        "vad: min_speech_ms must be a positive multiple of the frame shift");
  Check(cfg.max_silence_in_speech_ms > 0 &&
            cfg.max_silence_in_speech_ms % cfg.frame_shift_ms == 0,
        "vad: max_silence_in_speech_ms must be a positive multiple of the "
        "frame shift");
  Check(cfg.max_segment_ms > cfg.min_speech_ms,
        "vad: max_segment_ms must exceed min_speech_ms");
  Check(cfg.pad_ms >= 0 && cfg.pad_ms % cfg.frame_shift_ms == 0,
        "vad: pad_ms must be a non-negative multiple of the frame shift");
}

std::vector<Segment> VadStream::Push(const float* probs, int n) {
  Check(!finalized_, "vad: push after finalize");
  std::vector<Segment> out;
  const int r = cfg_.smooth_window / 2;
  for (int i = 0; i < n; ++i) {
    raw_.push_back(probs[i]);
    ++total_pushed_;
    // Frame next_smooth_ is final once its full right context has arrived.
    while (next_smooth_ + r < total_pushed_) {
      const int64_t lo = std::max<int64_t>(0, next_smooth_ - r);
      double sum = 0.0;
      for (int64_t j = lo; j <= next_smooth_ + r; ++j)
        sum += raw_[static_cast<size_t>(j - raw_base_)];
      Consume(static_cast<float>(sum / (next_smooth_ + r - lo + 1)), &out);
      ++next_smooth_;
      while (raw_base_ < next_smooth_ - r) {
        raw_.pop_front();
        ++raw_base_;
      }
    }
  }
  return out;
}

std::vector<Segment> VadStream::Push(const Tensor& probs) {
  return Push(probs.data(), static_cast<int>(probs.numel()));
}

std::vector<Segment> VadStream::Finalize() {
  std::vector<Segment> out;
  if (finalized_) return out;
  const int r = cfg_.smooth_window / 2;
  while (next_smooth_ < total_pushed_) {  // right-truncated tail windows
    const int64_t lo = std::max<int64_t>(0, next_smooth_ - r);
    const int64_t hi = std::min(total_pushed_ - 1, next_smooth_ + r);
    double sum = 0.0;
    for (int64_t j = lo; j <= hi; ++j)
      sum += raw_[static_cast<size_t>(j - raw_base_)];
    Consume(static_cast<float>(sum / (hi - lo + 1)), &out);
    ++next_smooth_;
  }
  if (mode_ == Mode::kSpeech) {
    const int shift = cfg_.frame_shift_ms;
    const int stream_end = static_cast<int>(total_pushed_) * shift;
    const int end =
        std::min(static_cast<int>(last_above_ + 1) * shift + cfg_.pad_ms,
                 stream_end);
    CloseSegment(end, static_cast<int>(last_above_), &out);
  }
  finalized_ = true;
  return out;
}

void VadStream::CloseSegment(int end_ms, int last_prob_frame,
                             std::vector<Segment>* out) {
  Segment seg;
  seg.start_ms = seg_start_ms_;
  seg.end_ms = end_ms;
  double sum = 0.0;
  const int n = last_prob_frame - static_cast<int>(seg_frame0_) + 1;
  for (int i = 0; i < n; ++i) sum += seg_probs_[static_cast<size_t>(i)];
  seg.mean_score = static_cast<float>(sum / std::max(1, n));
  if (seg.end_ms > seg.start_ms) out->push_back(seg);
  prev_end_ms_ = std::max(prev_end_ms_, seg.end_ms);
  mode_ = Mode::kSilence;
  run_start_ = -1;
  below_run_ = 0;
  seg_probs_.clear();
}

void VadStream::Consume(float p, std::vector<Segment>* out) {
  const int shift = cfg_.frame_shift_ms;
  const int64_t f = next_smooth_;  // absolute index of this smoothed frame
  const bool above = p > cfg_.speech_threshold;

  if (mode_ == Mode::kSilence) {
    if (!above) {
      run_start_ = -1;
      seg_probs_.clear();
      return;
    }
    if (run_start_ < 0) {
      run_start_ = f;
      seg_frame0_ = f;
      seg_probs_.clear();
    }
    seg_probs_.push_back(p);
    if ((f - run_start_ + 1) * shift >= cfg_.min_speech_ms) {
      mode_ = Mode::kSpeech;
      const int backdated =
          std::max(0, static_cast<int>(run_start_) * shift - cfg_.pad_ms);
      seg_start_ms_ = std::max(prev_end_ms_, backdated);
      last_above_ = f;
      below_run_ = 0;
    }
  } else {
    seg_probs_.push_back(p);
    if (above) {
      last_above_ = f;
      below_run_ = 0;
    } else {
      ++below_run_;
      if (static_cast<int>(below_run_) * shift >
          cfg_.max_silence_in_speech_ms) {
        const int end = static_cast<int>(last_above_ + 1) * shift + cfg_.pad_ms;
        CloseSegment(end, static_cast<int>(last_above_), out);
        return;
      }
    }
  }

  // Force-split overlong segments at the lowest-probability frame in the
  // trailing second, to avoid cutting mid-word.
  if (mode_ == Mode::kSpeech &&
      static_cast<int>(f + 1) * shift - seg_start_ms_ >= cfg_.max_segment_ms) {
    const int64_t win = std::max<int64_t>(1, 1000 / shift);
    const int64_t lo = std::max(seg_frame0_ + 1, f - win + 1);
    int64_t cut = lo;
    float best = seg_probs_[static_cast<size_t>(lo - seg_frame0_)];
    for (int64_t j = lo + 1; j <= f; ++j) {
      const float pj = seg_probs_[static_cast<size_t>(j - seg_frame0_)];
      if (pj < best) {
        best = pj;
        cut = j;
      }
    }
    const int cut_ms = static_cast<int>(cut) * shift;
    // Close the current piece at the cut and restart the open segment
    // there; the hysteresis counters carry over unchanged.
    std::deque<float> kept(seg_probs_.begin() + (cut - seg_frame0_),
                           seg_probs_.end());
    const int64_t below_run = below_run_;
    CloseSegment(cut_ms, static_cast<int>(cut) - 1, out);
    mode_ = Mode::kSpeech;
    below_run_ = below_run;
    seg_probs_ = std::move(kept);
    seg_frame0_ = cut;
    seg_start_ms_ = cut_ms;
    run_start_ = cut;
    last_above_ = std::max(last_above_, cut);
  }
}

std::vector<Segment> SegmentProbs(const Tensor& probs, const VadConfig& cfg) {
  VadStream stream(cfg);
  std::vector<Segment> segs = stream.Push(probs);
  std::vector<Segment> tail = stream.Finalize();
  segs.insert(segs.end(), tail.begin(), tail.end());
  return segs;
}

}  // namespace tinyasr
