// tinyasr/simd_dispatch.cpp
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

#include <cstdlib>
#include <cstring>

#include "tinyasr/simd.h"

namespace tinyasr::simd {

namespace {

Level Detect() {
  Level level = cpu_has_avx2() ? Level::kAvx2 : Level::kScalar;
  if (const char* env = std::getenv("TINYASR_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) level = Level::kScalar;
    else if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) level = Level::kAvx2;
  }
  return level;
}

Level g_level = Detect();

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level active_level() { return g_level; }

void set_level(Level level) {
  if (level == Level::kAvx2 && !cpu_has_avx2()) level = Level::kScalar;
  g_level = level;
}

const char* level_name(Level level) {
  return level == Level::kAvx2 ? "avx2" : "scalar";
}

void matmul_nt_f32(const float* a, const float* b, float* out, int m, int n, int k) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_level == Level::kAvx2) {
    detail::matmul_nt_f32_avx2(a, b, out, m, n, k);
    return;
  }
#endif
  detail::matmul_nt_f32_scalar(a, b, out, m, n, k);
}

void matmul_nn_f32(const float* a, const float* b, float* out, int m, int n, int k) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_level == Level::kAvx2) {
    detail::matmul_nn_f32_avx2(a, b, out, m, n, k);
    return;
  }
#endif
  detail::matmul_nn_f32_scalar(a, b, out, m, n, k);
}

void gemm_s8_nt(const int8_t* a, const int8_t* b, int32_t* out, int m, int n, int k) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_level == Level::kAvx2) {
    detail::gemm_s8_nt_avx2(a, b, out, m, n, k);
    return;
  }
#endif
  detail::gemm_s8_nt_scalar(a, b, out, m, n, k);
}

void axpy_f32(float alpha, const float* x, float* y, int n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_level == Level::kAvx2) {
    detail::axpy_f32_avx2(alpha, x, y, n);
    return;
  }
#endif
  detail::axpy_f32_scalar(alpha, x, y, n);
}

}  // namespace tinyasr::simd
