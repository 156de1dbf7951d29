// tinyasr/tests/test_simd.cpp
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

// Scalar/AVX2 variant equivalence. Float results may differ in rounding
// (different accumulation order), so they are compared with a relative
// bound; integer kernels must match exactly.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "tinyasr/simd.h"
#include "tinyasr/tensor.h"

using namespace tinyasr;
namespace sd = tinyasr::simd::detail;

namespace {

std::vector<float> RandomVec(int n, Rng& rng, float scale = 1.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal()) * scale;
  return v;
}

void CheckClose(const std::vector<float>& a, const std::vector<float>& b, int k) {
  REQUIRE(a.size() == b.size());
  // Error bound scales with the dot-product length.
  const float tol = 1e-5f * std::sqrt(static_cast<float>(k));
  for (size_t i = 0; i < a.size(); ++i) {
    const float denom = std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0f});
    CHECK(std::fabs(a[i] - b[i]) / denom < tol);
  }
}

}  // namespace

TEST_CASE("matmul_nt scalar vs avx2") {
  if (!simd::cpu_has_avx2()) return;
  Rng rng(1);
  for (int iter = 0; iter < 30; ++iter) {
    const int m = 1 + rng.uniform_int(17);
    const int n = 1 + rng.uniform_int(17);
    const int k = 1 + rng.uniform_int(100);
    auto a = RandomVec(m * k, rng);
    auto b = RandomVec(n * k, rng);
    std::vector<float> o1(m * n), o2(m * n);
    sd::matmul_nt_f32_scalar(a.data(), b.data(), o1.data(), m, n, k);
    sd::matmul_nt_f32_avx2(a.data(), b.data(), o2.data(), m, n, k);
    CheckClose(o1, o2, k);
  }
}

TEST_CASE("matmul_nn scalar vs avx2") {
  if (!simd::cpu_has_avx2()) return;
  Rng rng(2);
  for (int iter = 0; iter < 30; ++iter) {
    const int m = 1 + rng.uniform_int(13);
    const int n = 1 + rng.uniform_int(66);
    const int k = 1 + rng.uniform_int(40);
    auto a = RandomVec(m * k, rng);
    auto b = RandomVec(k * n, rng);
    std::vector<float> o1(m * n), o2(m * n);
    sd::matmul_nn_f32_scalar(a.data(), b.data(), o1.data(), m, n, k);
    sd::matmul_nn_f32_avx2(a.data(), b.data(), o2.data(), m, n, k);
    CheckClose(o1, o2, k);
  }
}

TEST_CASE("gemm_s8 scalar vs avx2 exact") {
  if (!simd::cpu_has_avx2()) return;
  Rng rng(3);
  for (int iter = 0; iter < 30; ++iter) {
    const int m = 1 + rng.uniform_int(9);
    const int n = 1 + rng.uniform_int(20);
    const int k = 1 + rng.uniform_int(130);
    std::vector<int8_t> a(m * k), b(n * k);
    for (auto& x : a) x = static_cast<int8_t>(rng.uniform_int(255) - 127);
    for (auto& x : b) x = static_cast<int8_t>(rng.uniform_int(255) - 127);
    std::vector<int32_t> o1(m * n), o2(m * n);
    sd::gemm_s8_nt_scalar(a.data(), b.data(), o1.data(), m, n, k);
    sd::gemm_s8_nt_avx2(a.data(), b.data(), o2.data(), m, n, k);
    for (size_t i = 0; i < o1.size(); ++i) CHECK(o1[i] == o2[i]);
  }
}

TEST_CASE("axpy scalar vs avx2") {
  if (!simd::cpu_has_avx2()) return;
  Rng rng(4);
  for (int iter = 0; iter < 20; ++iter) {
    const int n = 1 + rng.uniform_int(200);
    auto x = RandomVec(n, rng);
    auto y1 = RandomVec(n, rng);
    auto y2 = y1;
    const float alpha = static_cast<float>(rng.normal());
    sd::axpy_f32_scalar(alpha, x.data(), y1.data(), n);
    sd::axpy_f32_avx2(alpha, x.data(), y2.data(), n);
    CheckClose(y1, y2, 1);
  }
}

TEST_CASE("runtime dispatch override") {
  const simd::Level before = simd::active_level();
  simd::set_level(simd::Level::kScalar);
  CHECK(simd::active_level() == simd::Level::kScalar);
  simd::set_level(before);
}
