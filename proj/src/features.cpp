// tinyasr/features.cpp
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

#include "tinyasr/features.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace tinyasr {

namespace {

constexpr double kLogFloor = 1e-10;
constexpr float kToneAmp1 = 0.22f;  // relative full-scale amplitudes of the
constexpr float kToneAmp2 = 0.13f;  // two tones that make up a token

// In-place iterative radix-2 FFT; n must be a power of two.
void Fft(std::vector<std::complex<float>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<float> wl(static_cast<float>(std::cos(ang)),
                                 static_cast<float>(std::sin(ang)));
    for (size_t i = 0; i < n; i += len) {
      std::complex<float> w(1.0f, 0.0f);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<float> u = a[i + k];
        const std::complex<float> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular mel filters as (fft_bin -> weight) rows over n_fft/2+1 bins.
std::vector<std::vector<float>> MelFilters(int n_mels, int n_fft,
                                           int sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = HzToMel(0.0);
  const double mel_hi = HzToMel(sample_rate / 2.0);
  std::vector<double> centers(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
    centers[i] = MelToHz(mel) * n_fft / sample_rate;  // fractional fft bin
  }
  std::vector<std::vector<float>> filters(
      n_mels, std::vector<float>(n_bins, 0.0f));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      double w = 0.0;
      if (b > lo && b < mid)
        w = (b - lo) / (mid - lo);
      else if (b >= mid && b < hi)
        w = (hi - b) / (hi - mid);
      filters[m][b] = static_cast<float>(w);
    }
  }
  return filters;
}

int NextPow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

FeatureFrames Fbank(const std::vector<int16_t>& pcm, int sample_rate,
                    const FbankConfig& cfg) {
  Check(sample_rate == 8000 || sample_rate == 16000,
        "fbank: sample rate must be 8000 or 16000");
  Check(cfg.n_mels > 0 && cfg.frame_length_ms > 0 && cfg.frame_shift_ms > 0,
        "fbank: invalid config");
  const int window = sample_rate * cfg.frame_length_ms / 1000;
  const int shift = sample_rate * cfg.frame_shift_ms / 1000;
  const int n_frames =
      pcm.size() >= static_cast<size_t>(window)
          ? 1 + static_cast<int>((pcm.size() - window) / shift)
          : 0;

  FeatureFrames out;
  out.frame_shift_ms = cfg.frame_shift_ms;
  out.frame_length_ms = cfg.frame_length_ms;
  out.frames = Tensor({n_frames, cfg.n_mels});
  if (n_frames == 0) return out;

  // Pre-emphasis over the whole signal, normalized to [-1, 1).
  std::vector<float> x(pcm.size());
  x[0] = pcm[0] * (1.0f - cfg.preemphasis) / 32768.0f;
  for (size_t i = 1; i < pcm.size(); ++i)
    x[i] = (pcm[i] - cfg.preemphasis * pcm[i - 1]) / 32768.0f;

  const int n_fft = NextPow2(window);
  std::vector<float> hamming(window);
  for (int i = 0; i < window; ++i)
    hamming[i] = 0.54f - 0.46f * static_cast<float>(std::cos(
                                     2.0 * std::numbers::pi * i / (window - 1)));
  const auto filters = MelFilters(cfg.n_mels, n_fft, sample_rate);

  std::vector<std::complex<float>> buf(n_fft);
  std::vector<float> power(n_fft / 2 + 1);
  for (int f = 0; f < n_frames; ++f) {
    for (int i = 0; i < window; ++i)
      buf[i] = std::complex<float>(x[f * shift + i] * hamming[i], 0.0f);
    std::fill(buf.begin() + window, buf.end(), std::complex<float>(0.f, 0.f));
    Fft(buf);
    for (int b = 0; b <= n_fft / 2; ++b) power[b] = std::norm(buf[b]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (int b = 0; b <= n_fft / 2; ++b)
        e += static_cast<double>(filters[m][b]) * power[b];
      out.frames.at(f, m) =
          static_cast<float>(std::log(std::max(e, kLogFloor)));
    }
  }

  if (cfg.mean_normalize) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      double mean = 0.0;
      for (int f = 0; f < n_frames; ++f) mean += out.frames.at(f, m);
      mean /= n_frames;
      for (int f = 0; f < n_frames; ++f)
        out.frames.at(f, m) -= static_cast<float>(mean);
    }
  }
  return out;
}

FeatureFrames LfrStack(const FeatureFrames& in, int m, int n) {
  Check(m >= 1 && n >= 1, "lfr_stack: m and n must be >= 1");
  const int t = in.frames.dim(0), d = in.frames.dim(1);
  const int out_t = (t + n - 1) / n;
  FeatureFrames out;
  out.frame_shift_ms = in.frame_shift_ms * n;
  out.frame_length_ms = in.frame_length_ms;
  out.frames = Tensor({out_t, m * d});
  for (int i = 0; i < out_t; ++i)
    for (int j = 0; j < m; ++j) {
      const int src = std::min(i * n + j, t - 1);  // repeat-last padding
      for (int k = 0; k < d; ++k)
        out.frames.at(i, j * d + k) = in.frames.at(src, k);
    }
  return out;
}

int TokenBank::Partner(int id, const SynthConfig& cfg) const {
  const int base = cfg.vocab - cfg.n_confusable;
  if (id < base || id >= cfg.vocab) return -1;
  return base + ((id - base) ^ 1);
}

namespace {

// Samples of the pure two-tone signal for `token` at absolute sample
// indices [begin, end), written additively with amplitude `amp`.
void AddTone(std::vector<float>& out, int64_t begin, int64_t end, float amp,
             const TokenBank& bank, int token) {
  const double f1 = bank.freq_hz[2 * token], f2 = bank.freq_hz[2 * token + 1];
  const double w1 = 2.0 * std::numbers::pi * f1 / bank.sample_rate;
  const double w2 = 2.0 * std::numbers::pi * f2 / bank.sample_rate;
  for (int64_t i = begin; i < end && i < static_cast<int64_t>(out.size()); ++i)
    out[i] += amp * static_cast<float>(
                        kToneAmp1 * std::sin(w1 * static_cast<double>(i)) +
                        kToneAmp2 * std::sin(w2 * static_cast<double>(i)));
}

std::vector<int16_t> ToPcm(const std::vector<float>& x) {
  std::vector<int16_t> pcm(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const float v = std::clamp(x[i], -1.0f, 1.0f) * 32767.0f;
    pcm[i] = static_cast<int16_t>(std::lround(v));
  }
  return pcm;
}

}  // namespace

TokenBank MakeTokenBank(const SynthConfig& cfg) {
  Check(cfg.vocab >= 1, "token bank: empty vocabulary");
  Check(cfg.n_confusable % 2 == 0 && cfg.n_confusable <= cfg.vocab,
        "token bank: n_confusable must be even and <= vocab");
  TokenBank bank;
  bank.sample_rate = cfg.sample_rate;
  bank.n_mels = FbankConfig{}.n_mels;

  // Frequency pool: multiples of 100 Hz. 100 Hz divides the 10 ms frame
  // shift exactly, so a sustained tone yields bit-identical frames and the
  // template below really is the steady state.
  std::vector<float> pool;
  for (int hz = 200; hz <= cfg.sample_rate * 45 / 100; hz += 100)
    pool.push_back(static_cast<float>(hz));
  Check(static_cast<int>(pool.size()) >= 2 * cfg.vocab,
        "token bank: vocabulary too large for the frequency pool");
  Rng rng(cfg.template_seed);
  for (size_t i = pool.size(); i > 1; --i)
    std::swap(pool[i - 1], pool[rng.uniform_int(static_cast<int>(i))]);
  bank.freq_hz.assign(pool.begin(), pool.begin() + 2 * cfg.vocab);

  // Templates: interior fbank frame of 0.2 s of the pure token signal.
  const FbankConfig fb;
  const int n_samp = cfg.sample_rate / 5;
  bank.templates = Tensor({cfg.vocab, bank.n_mels});
  for (int v = 0; v < cfg.vocab; ++v) {
    std::vector<float> x(n_samp, 0.0f);
    AddTone(x, 0, n_samp, 1.0f, bank, v);
    const FeatureFrames ff = Fbank(ToPcm(x), cfg.sample_rate, fb);
    Check(ff.frames.dim(0) > 6, "token bank: template clip too short");
    for (int m = 0; m < bank.n_mels; ++m)
      bank.templates.at(v, m) = ff.frames.at(3, m);
  }
  const FeatureFrames sil =
      Fbank(std::vector<int16_t>(n_samp, 0), cfg.sample_rate, fb);
  bank.silence = Tensor({1, bank.n_mels});
  for (int m = 0; m < bank.n_mels; ++m)
    bank.silence.at(0, m) = sil.frames.at(3, m);
  return bank;
}

Tensor MorphTemplate(const TokenBank& bank, int id_a, int id_b, float lambda) {
  Check(id_a >= 0 && id_a < bank.templates.dim(0) && id_b >= 0 &&
            id_b < bank.templates.dim(0),
        "morph: token id out of range");
  Tensor t({1, bank.n_mels});
  // Log-mel templates mix in the power domain: amplitudes lambda and
  // 1-lambda on disjoint tone sets add as lambda^2 / (1-lambda)^2 powers.
  const double wa = static_cast<double>(lambda) * lambda;
  const double wb = (1.0 - lambda) * (1.0 - lambda);
  for (int m = 0; m < bank.n_mels; ++m) {
    const double p = wa * std::exp(static_cast<double>(bank.templates.at(id_a, m))) +
                     wb * std::exp(static_cast<double>(bank.templates.at(id_b, m)));
    t.at(0, m) = static_cast<float>(std::log(std::max(p, kLogFloor)));
  }
  return t;
}

SynthResult SynthGenerate(const std::vector<int>& tokens, Rng& rng,
                          const SynthConfig& cfg, const TokenBank& bank) {
  Check(cfg.d_min >= 1 && cfg.d_max >= cfg.d_min, "synth: bad duration range");
  for (int tok : tokens)
    Check(tok >= 0 && tok < cfg.vocab, "synth: token id out of range");

  // First pass: draw the layout (durations, gaps, mixing weights).
  SynthResult res;
  int t = 0;
  std::vector<Tensor> rows;  // one 1xD template row per span
  auto push_silence = [&]() {
    const int d = cfg.silence_min + rng.uniform_int(cfg.silence_max -
                                                    cfg.silence_min + 1);
    res.align.push_back({kSilenceId, t, t + d});
    rows.push_back(bank.silence);
    t += d;
  };
  for (int tok : tokens) {
    if (cfg.silence_prob > 0.0f && rng.uniform() < cfg.silence_prob)
      push_silence();
    const int d = cfg.d_min + rng.uniform_int(cfg.d_max - cfg.d_min + 1);
    float lambda = 1.0f;
    const int partner = bank.Partner(tok, cfg);
    if (partner >= 0)
      lambda = cfg.morph_lo +
               (cfg.morph_hi - cfg.morph_lo) * static_cast<float>(rng.uniform());
    res.lambdas.push_back(lambda);
    rows.push_back(partner >= 0 ? MorphTemplate(bank, tok, partner, lambda)
                                : [&] {
                                    Tensor r({1, bank.n_mels});
                                    for (int m = 0; m < bank.n_mels; ++m)
                                      r.at(0, m) = bank.templates.at(tok, m);
                                    return r;
                                  }());
    res.align.push_back({tok, t, t + d});
    t += d;
  }
  if (!tokens.empty() && cfg.silence_prob > 0.0f &&
      rng.uniform() < cfg.silence_prob)
    push_silence();

  res.feats.frame_shift_ms = FbankConfig{}.frame_shift_ms;
  res.feats.frame_length_ms = FbankConfig{}.frame_length_ms;
  res.feats.frames = Tensor({t, bank.n_mels});
  for (size_t s = 0; s < res.align.size(); ++s)
    for (int f = res.align[s].start_frame; f < res.align[s].end_frame; ++f)
      for (int m = 0; m < bank.n_mels; ++m)
        res.feats.frames.at(f, m) =
            rows[s].at(0, m) +
            cfg.noise_sigma * static_cast<float>(rng.normal());
  return res;
}

std::vector<int16_t> RenderAudio(const Alignment& align,
                                 const std::vector<float>& lambdas,
                                 const SynthConfig& cfg,
                                 const TokenBank& bank) {
  const FbankConfig fb;
  const int shift = cfg.sample_rate * fb.frame_shift_ms / 1000;
  const int window = cfg.sample_rate * fb.frame_length_ms / 1000;
  const int t = align.empty() ? 0 : align.back().end_frame;
  if (t == 0) return {};
  // Tail padding keeps the frame count equal to the alignment length; the
  // final span's signal is extended through it so the last frames stay on
  // template.
  std::vector<float> x(static_cast<size_t>(t) * shift + (window - shift),
                       0.0f);
  size_t li = 0;
  for (size_t s = 0; s < align.size(); ++s) {
    const AlignSpan& span = align[s];
    const int64_t begin = static_cast<int64_t>(span.start_frame) * shift;
    const int64_t end = s + 1 == align.size()
                            ? static_cast<int64_t>(x.size())
                            : static_cast<int64_t>(span.end_frame) * shift;
    if (span.token_id == kSilenceId) continue;
    Check(li < lambdas.size(), "render: missing mixing weight");
    const float lambda = lambdas[li++];
    const int partner = bank.Partner(span.token_id, cfg);
    if (partner >= 0) {
      AddTone(x, begin, end, lambda, bank, span.token_id);
      AddTone(x, begin, end, 1.0f - lambda, bank, partner);
    } else {
      AddTone(x, begin, end, 1.0f, bank, span.token_id);
    }
  }
  Check(li == lambdas.size(), "render: too many mixing weights");
  return ToPcm(x);
}

}  // namespace tinyasr
