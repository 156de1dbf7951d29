// tinyasr/cif.h
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

#ifndef TINYASR_CIF_H_
#define TINYASR_CIF_H_

#include <vector>

#include "tinyasr/tensor.h"

// Continuous integrate-and-fire. Per-frame weights alpha are accumulated
// left to right; each time the running sum crosses the threshold a token
// boundary "fires". The crossing frame's weight is split between the
// token being completed and a carry into the next one, so every emitted
// token integrates exactly `threshold` worth of weight. A tail residual
// of at least threshold/2 emits one final token; less is discarded.

namespace tinyasr::cif {

// How a frame's weight slice entered a token; needed for exact gradients.
// With prefix sums S_t = sum(alpha[0..t]) and j the 1-based fire count:
//   kFull:  w = alpha[t]                        (frame fully inside token)
//   kFire:  w = j*thr - S_{t-1}                 (part completing token j)
//   kCarry: w = S_t - j_prev*thr                (leftover after last fire)
//   kConst: w = thr                             (whole token inside frame t)
struct Use {
  enum Kind { kFull, kFire, kCarry, kConst } kind;
  int frame;
  int token;
  float weight;
};

struct Result {
  std::vector<int> fires;       // frame index of each token's firing frame
  Tensor embeddings;            // [N x D] weighted sums of hidden frames
  float residual = 0.0f;        // weight left in the accumulator at the end
  std::vector<Use> uses;        // per-(token, frame) weight records
  int n_tokens = 0;
};

// hidden[T x D], alphas length T. If force_n > 0, emission stops at
// force_n tokens and a final token is closed from whatever residual is
// left at the last frame (training-time exact-length mode); the tail
// rule is skipped. If force_n == 0 the tail rule applies.
Result integrate(const Tensor& hidden, const Tensor& alphas,
                 float threshold = 1.0f, int force_n = 0);

}  // namespace tinyasr::cif

#endif  // TINYASR_CIF_H_
