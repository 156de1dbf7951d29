// tinyasr/tests/gradcheck.h
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

#ifndef TINYASR_TESTS_GRADCHECK_H_
#define TINYASR_TESTS_GRADCHECK_H_

// Test-only finite-difference oracle, independent of the tape's backward
// pass: it re-evaluates the forward graph at perturbed inputs and
// compares central differences against analytic directional derivatives.

#include <cmath>
#include <functional>
#include <vector>

#include "tinyasr/tape.h"
#include "tinyasr/tensor.h"

namespace tinyasr::testing {

// `build` constructs the graph on a fresh tape from leaves made of
// `inputs` and returns the scalar root id. Returns the max relative
// error over `n_dirs` random directions.
//
// The step is deliberately coarse (1e-2): everything here is evaluated
// in fp32, so the central difference is contaminated by evaluation
// noise of order eps_f32 * |loss| / (2h). A smaller step would let
// that noise term dominate the truncation error it is meant to reduce.
inline double GradCheckDirectional(
    const std::function<int(Tape&, const std::vector<int>&)>& build,
    const std::vector<Tensor>& inputs, Rng& rng, int n_dirs = 3,
    float h = 1e-2f) {
  auto eval = [&](const std::vector<Tensor>& xs) -> double {
    Tape tape;
    std::vector<int> ids;
    ids.reserve(xs.size());
    for (const Tensor& x : xs) ids.push_back(tape.leaf(x));
    const int root = build(tape, ids);
    return tape.val(root)[0];
  };

  // Analytic gradients once.
  Tape tape;
  std::vector<int> ids;
  for (const Tensor& x : inputs) ids.push_back(tape.leaf(x));
  const int root = build(tape, ids);
  tape.backward(root);
  std::vector<Tensor> grads;
  double grad_norm_sq = 0.0;
  for (int id : ids) {
    grads.push_back(tape.grad(id).empty() ? Tensor(tape.val(id).shape())
                                          : tape.grad(id));
    for (int64_t j = 0; j < grads.back().numel(); ++j)
      grad_norm_sq += static_cast<double>(grads.back()[j]) * grads.back()[j];
  }
  // Floor for the relative-error denominator. A random unit direction can
  // be nearly orthogonal to the gradient, leaving a directional derivative
  // much smaller than the problem's scale; without a scale-aware floor,
  // fp32 evaluation noise on such trials masquerades as gradient error.
  const double floor = std::max(1e-3, 1e-2 * std::sqrt(grad_norm_sq));

  double max_rel = 0.0;
  for (int trial = 0; trial < n_dirs; ++trial) {
    // Unit-norm direction, so `h` bounds the true perturbation size.
    std::vector<Tensor> dir;
    double norm_sq = 0.0;
    for (size_t i = 0; i < inputs.size(); ++i) {
      Tensor d(inputs[i].shape());
      for (int64_t j = 0; j < d.numel(); ++j) {
        d[j] = static_cast<float>(rng.normal());
        norm_sq += static_cast<double>(d[j]) * d[j];
      }
      dir.push_back(std::move(d));
    }
    const float inv_norm = static_cast<float>(1.0 / std::sqrt(norm_sq));
    double analytic = 0.0;
    for (size_t i = 0; i < inputs.size(); ++i)
      for (int64_t j = 0; j < dir[i].numel(); ++j) {
        dir[i][j] *= inv_norm;
        analytic += static_cast<double>(grads[i][j]) * dir[i][j];
      }
    std::vector<Tensor> plus = inputs, minus = inputs;
    for (size_t i = 0; i < inputs.size(); ++i)
      for (int64_t j = 0; j < inputs[i].numel(); ++j) {
        plus[i][j] += h * dir[i][j];
        minus[i][j] -= h * dir[i][j];
      }
    const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), floor});
    max_rel = std::max(max_rel, std::fabs(fd - analytic) / denom);
  }
  return max_rel;
}

inline Tensor RandomTensor(std::vector<int> shape, Rng& rng, float scale = 1.0f,
                           float offset = 0.0f) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.normal()) * scale + offset;
  return t;
}

}  // namespace tinyasr::testing

#endif  // TINYASR_TESTS_GRADCHECK_H_
