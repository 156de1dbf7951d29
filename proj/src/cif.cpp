// tinyasr/cif.cpp
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

#include "tinyasr/cif.h"

#include "tinyasr/simd.h"

namespace tinyasr::cif {

Result integrate(const Tensor& hidden, const Tensor& alphas,
                 float threshold, int force_n) {
  const int t_len = hidden.rows();
  const int d = hidden.cols();
  Check(alphas.numel() == t_len, "cif: alphas length != frame count");
  Check(threshold > 0.0f, "cif: threshold must be positive");

  Result res;
  std::vector<std::vector<float>> embs;
  std::vector<float> cur(d, 0.0f);

  float acc = 0.0f;
  auto emit = [&](int frame) {
    res.fires.push_back(frame);
    embs.push_back(cur);
    std::fill(cur.begin(), cur.end(), 0.0f);
  };

  for (int t = 0; t < t_len; ++t) {
    if (force_n > 0 && static_cast<int>(embs.size()) >= force_n) break;
    const float* h = hidden.data() + static_cast<int64_t>(t) * d;
    float a = alphas[t];
    bool fired_here = false;
    while (acc + a >= threshold &&
           (force_n == 0 || static_cast<int>(embs.size()) < force_n)) {
      const float w1 = threshold - acc;
      res.uses.push_back({fired_here ? Use::kConst : Use::kFire, t,
                          static_cast<int>(embs.size()), w1});
      simd::axpy_f32(w1, h, cur.data(), d);
      emit(t);
      a -= w1;
      acc = 0.0f;
      fired_here = true;
    }
    if (a > 0.0f && (force_n == 0 || static_cast<int>(embs.size()) < force_n)) {
      res.uses.push_back({fired_here ? Use::kCarry : Use::kFull, t,
                          static_cast<int>(embs.size()), a});
      simd::axpy_f32(a, h, cur.data(), d);
      acc += a;
    } else if (fired_here) {
      acc = 0.0f;
    }
  }
  res.residual = acc;

  if (force_n > 0) {
    // Exact-length mode: close the partial token from whatever is left,
    // then pad with zero rows in the (degenerate) case of missing mass.
    while (static_cast<int>(embs.size()) < force_n) {
      emit(t_len > 0 ? t_len - 1 : 0);
      acc = 0.0f;
    }
  } else if (acc >= 0.5f * threshold && t_len > 0) {
    emit(t_len - 1);  // tail rule: residual >= thr/2 becomes a final token
  }

  res.n_tokens = static_cast<int>(embs.size());
  if (res.n_tokens > 0) {
    res.embeddings = Tensor({res.n_tokens, d});
    for (int j = 0; j < res.n_tokens; ++j)
      for (int i = 0; i < d; ++i) res.embeddings.at(j, i) = embs[j][i];
  }
  return res;
}

}  // namespace tinyasr::cif
