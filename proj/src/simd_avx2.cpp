// tinyasr/simd_avx2.cpp
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

// AVX2 variants. This translation unit is the only one compiled with
// -mavx2/-mfma; dispatch.cpp guarantees these are never called on CPUs
// without AVX2.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "tinyasr/simd.h"

namespace tinyasr::simd::detail {

namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

inline int32_t hsum256_i32(__m256i v) {
  __m128i lo = _mm256_castsi256_si128(v);
  __m128i hi = _mm256_extracti128_si256(v, 1);
  lo = _mm_add_epi32(lo, hi);
  lo = _mm_add_epi32(lo, _mm_shuffle_epi32(lo, _MM_SHUFFLE(1, 0, 3, 2)));
  lo = _mm_add_epi32(lo, _mm_shuffle_epi32(lo, _MM_SHUFFLE(2, 3, 0, 1)));
  return _mm_cvtsi128_si32(lo);
}

}  // namespace

void matmul_nt_f32_avx2(const float* a, const float* b, float* out,
                        int m, int n, int k) {
  const int k8 = k & ~7;
  for (int i = 0; i < m; ++i) {
    const float* ai = a + static_cast<int64_t>(i) * k;
    float* oi = out + static_cast<int64_t>(i) * n;
    int j = 0;
    // Two output columns per pass share the loads of ai.
    for (; j + 1 < n; j += 2) {
      const float* b0 = b + static_cast<int64_t>(j) * k;
      const float* b1 = b0 + k;
      __m256 acc0 = _mm256_setzero_ps();
      __m256 acc1 = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8) {
        __m256 va = _mm256_loadu_ps(ai + p);
        acc0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(b0 + p), acc0);
        acc1 = _mm256_fmadd_ps(va, _mm256_loadu_ps(b1 + p), acc1);
      }
      float s0 = hsum256(acc0), s1 = hsum256(acc1);
      for (int p = k8; p < k; ++p) {
        s0 += ai[p] * b0[p];
        s1 += ai[p] * b1[p];
      }
      oi[j] = s0;
      oi[j + 1] = s1;
    }
    for (; j < n; ++j) {
      const float* bj = b + static_cast<int64_t>(j) * k;
      __m256 acc = _mm256_setzero_ps();
      for (int p = 0; p < k8; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(ai + p), _mm256_loadu_ps(bj + p), acc);
      float s = hsum256(acc);
      for (int p = k8; p < k; ++p) s += ai[p] * bj[p];
      oi[j] = s;
    }
  }
}

void matmul_nn_f32_avx2(const float* a, const float* b, float* out,
                        int m, int n, int k) {
  const int n8 = n & ~7;
  for (int i = 0; i < m; ++i) {
    float* oi = out + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) oi[j] = 0.0f;
    const float* ai = a + static_cast<int64_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const __m256 av = _mm256_set1_ps(ai[p]);
      const float* bp = b + static_cast<int64_t>(p) * n;
      int j = 0;
      for (; j < n8; j += 8) {
        __m256 o = _mm256_loadu_ps(oi + j);
        o = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp + j), o);
        _mm256_storeu_ps(oi + j, o);
      }
      for (; j < n; ++j) oi[j] += ai[p] * bp[j];
    }
  }
}

void gemm_s8_nt_avx2(const int8_t* a, const int8_t* b, int32_t* out,
                     int m, int n, int k) {
  // Widen s8 -> s16 and multiply-accumulate pairs into s32.
  // |products| <= 127*127 so the s16 pair sum in madd cannot overflow,
  // and k < 2^16 keeps the s32 accumulator safe. Four output columns per
  // pass share each 16-wide load of the activation row, which is what
  // lets this path beat the f32 gemm instead of losing to it.
  const int k16 = k & ~15;
  for (int i = 0; i < m; ++i) {
    const int8_t* ai = a + static_cast<int64_t>(i) * k;
    int32_t* oi = out + static_cast<int64_t>(i) * n;
    int j = 0;
    for (; j + 3 < n; j += 4) {
      const int8_t* b0 = b + static_cast<int64_t>(j) * k;
      const int8_t* b1 = b0 + k;
      const int8_t* b2 = b1 + k;
      const int8_t* b3 = b2 + k;
      __m256i acc0 = _mm256_setzero_si256();
      __m256i acc1 = _mm256_setzero_si256();
      __m256i acc2 = _mm256_setzero_si256();
      __m256i acc3 = _mm256_setzero_si256();
      for (int p = 0; p < k16; p += 16) {
        __m256i va = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(ai + p)));
        acc0 = _mm256_add_epi32(acc0, _mm256_madd_epi16(va, _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b0 + p)))));
        acc1 = _mm256_add_epi32(acc1, _mm256_madd_epi16(va, _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b1 + p)))));
        acc2 = _mm256_add_epi32(acc2, _mm256_madd_epi16(va, _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b2 + p)))));
        acc3 = _mm256_add_epi32(acc3, _mm256_madd_epi16(va, _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b3 + p)))));
      }
      int32_t s0 = hsum256_i32(acc0);
      int32_t s1 = hsum256_i32(acc1);
      int32_t s2 = hsum256_i32(acc2);
      int32_t s3 = hsum256_i32(acc3);
      for (int p = k16; p < k; ++p) {
        const int32_t av = ai[p];
        s0 += av * b0[p];
        s1 += av * b1[p];
        s2 += av * b2[p];
        s3 += av * b3[p];
      }
      oi[j] = s0;
      oi[j + 1] = s1;
      oi[j + 2] = s2;
      oi[j + 3] = s3;
    }
    for (; j < n; ++j) {
      const int8_t* bj = b + static_cast<int64_t>(j) * k;
      __m256i acc = _mm256_setzero_si256();
      for (int p = 0; p < k16; p += 16) {
        __m256i va = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(ai + p)));
        __m256i vb = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(bj + p)));
        acc = _mm256_add_epi32(acc, _mm256_madd_epi16(va, vb));
      }
      int32_t s = hsum256_i32(acc);
      for (int p = k16; p < k; ++p)
        s += static_cast<int32_t>(ai[p]) * static_cast<int32_t>(bj[p]);
      oi[j] = s;
    }
  }
}

void axpy_f32_avx2(float alpha, const float* x, float* y, int n) {
  const __m256 va = _mm256_set1_ps(alpha);
  const int n8 = n & ~7;
  int i = 0;
  for (; i < n8; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace tinyasr::simd::detail

#endif  // x86_64
