// tinyasr/tape.h
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

#ifndef TINYASR_TAPE_H_
#define TINYASR_TAPE_H_

#include <functional>
#include <vector>

#include "tinyasr/tensor.h"

// Reverse-mode tape over the fixed kernel set the toy training loop
// needs (no general autodiff). Ops append nodes in forward order, so
// node creation order is already a topological order and backward() is a
// single reverse sweep. A tape is single-threaded; gradients accumulate
// across backward() calls until zero_grads().

namespace tinyasr {

class Tape {
 public:
  // Leaves. Gradients are harvested from leaf nodes after backward().
  int leaf(const Tensor& v);
  int constant(const Tensor& v);  // participates in forward only

  const Tensor& val(int id) const { return nodes_[id].val; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Linear algebra.
  int matmul(int a, int b);
  int linear(int x, int w, int b = -1);  // y = x*W^T (+bias), W[out x in]
  int transpose(int x);

  // Elementwise / shape.
  int add(int a, int b);
  int mul(int a, int b);
  int scale(int a, float s);
  int add_rowvec(int x, int v);
  int add_const(int x, const Tensor& c);  // e.g. attention masks, pos enc
  int sigmoid(int x);
  int tanh_(int x);
  int relu(int x);
  int concat_cols(int a, int b);
  int slice_cols(int x, int off, int n);
  int concat_rows(const std::vector<int>& parts);
  int gather_rows(int table, std::vector<int> ids);
  int replace_rows(int x, int y, std::vector<uint8_t> use_y);

  // Normalization / attention pieces.
  int softmax_rows(int x);
  int layer_norm(int x, int gamma, int beta, float eps = 1e-5f);

  // Convolutions over time (see kernels.h for shapes).
  int conv1d_time(int x, int w, int b, int width);
  int tconv1d_time(int x, int w, int b, int rate);

  // CIF and losses.
  int scale_to_sum(int x, float target);         // x * target / sum(x)
  int cif_embed(int hidden, int alphas, float threshold, int force_n);
  int sum_all(int x);                            // -> [1]
  int abs_minus(int s, float c);                 // |s - c|, s scalar
  int weighted_sum(const std::vector<int>& scalars, const std::vector<float>& w);
  int ce_loss(int logits, const std::vector<int>& targets, float smoothing);
  int bce_logits(int logits, std::vector<float> targets);

  // Runs the reverse sweep from a scalar root. Gradients accumulate.
  void backward(int root);
  void zero_grads();

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily
    bool seen = false;
    std::function<void(Tape&, const Tensor&)> back;
  };

  int push(Tensor v, std::function<void(Tape&, const Tensor&)> back = nullptr);
  void accum(int id, const Tensor& g);
  Tensor& grad_buf(int id);

  std::vector<Node> nodes_;
};

}  // namespace tinyasr

#endif  // TINYASR_TAPE_H_
