// tinyasr/simd.h
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

#ifndef TINYASR_SIMD_H_
#define TINYASR_SIMD_H_

#include <cstdint>

// Arithmetic inner loops used by the kernel layer. Every routine has a
// scalar reference implementation and an AVX2 variant; the active variant
// is selected once at startup from CPUID and can be overridden with the
// TINYASR_SIMD environment variable ("scalar" or "avx2"). The variants
// are equivalence-tested against each other in tests/test_simd.cpp.

namespace tinyasr::simd {

enum class Level { kScalar = 0, kAvx2 = 1 };

Level active_level();
void set_level(Level level);      // test hook; also applied via TINYASR_SIMD
const char* level_name(Level level);
bool cpu_has_avx2();

// out[m x n] = a[m x k] * b[n x k]^T. b is stored row-major with rows as
// the output columns, so every output element is one contiguous dot
// product. Accumulation is in f32.
void matmul_nt_f32(const float* a, const float* b, float* out, int m, int n, int k);

// out[m x n] = a[m x k] * b[k x n] (both row-major). Accumulation in f32.
void matmul_nn_f32(const float* a, const float* b, float* out, int m, int n, int k);

// out[m x n] = sum_k a[m x k] * b[n x k], exact int32 accumulation.
void gemm_s8_nt(const int8_t* a, const int8_t* b, int32_t* out, int m, int n, int k);

// y[i] += alpha * x[i]
void axpy_f32(float alpha, const float* x, float* y, int n);

namespace detail {
void matmul_nt_f32_scalar(const float* a, const float* b, float* out, int m, int n, int k);
void matmul_nn_f32_scalar(const float* a, const float* b, float* out, int m, int n, int k);
void gemm_s8_nt_scalar(const int8_t* a, const int8_t* b, int32_t* out, int m, int n, int k);
void axpy_f32_scalar(float alpha, const float* x, float* y, int n);
#if defined(__x86_64__) || defined(_M_X64)
void matmul_nt_f32_avx2(const float* a, const float* b, float* out, int m, int n, int k);
void matmul_nn_f32_avx2(const float* a, const float* b, float* out, int m, int n, int k);
void gemm_s8_nt_avx2(const int8_t* a, const int8_t* b, int32_t* out, int m, int n, int k);
void axpy_f32_avx2(float alpha, const float* x, float* y, int n);
#endif
}  // namespace detail

}  // namespace tinyasr::simd

#endif  // TINYASR_SIMD_H_
