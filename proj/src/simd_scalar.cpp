// tinyasr/simd_scalar.cpp
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

// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against.

#include "tinyasr/simd.h"

namespace tinyasr::simd::detail {

void matmul_nt_f32_scalar(const float* a, const float* b, float* out,
                          int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<int64_t>(i) * k;
    float* oi = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const float* bj = b + static_cast<int64_t>(j) * k;
      float acc = 0.0f;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      oi[j] = acc;
    }
  }
}

void matmul_nn_f32_scalar(const float* a, const float* b, float* out,
                          int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    float* oi = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) oi[j] = 0.0f;
    const float* ai = a + static_cast<int64_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const float av = ai[p];
      const float* bp = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) oi[j] += av * bp[j];
    }
  }
}

void gemm_s8_nt_scalar(const int8_t* a, const int8_t* b, int32_t* out,
                       int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const int8_t* ai = a + static_cast<int64_t>(i) * k;
    int32_t* oi = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const int8_t* bj = b + static_cast<int64_t>(j) * k;
      int32_t acc = 0;
      for (int p = 0; p < k; ++p)
        acc += static_cast<int32_t>(ai[p]) * static_cast<int32_t>(bj[p]);
      oi[j] = acc;
    }
  }
}

void axpy_f32_scalar(float alpha, const float* x, float* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace tinyasr::simd::detail
