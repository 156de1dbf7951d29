// tinyasr/kernels.h
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

#ifndef TINYASR_KERNELS_H_
#define TINYASR_KERNELS_H_

#include <optional>

#include "tinyasr/tensor.h"

// Forward neural-net primitives. All kernels are pure: identical inputs
// give bit-identical outputs and there is no global mutable state, so
// they are safe to call concurrently on distinct data.
//
// Numeric convention: element arithmetic and matrix-product accumulation
// are float32; statistical reductions (softmax normalizers, layer-norm
// moments, loss sums) accumulate in float64. This split is applied
// uniformly across the toolkit.

namespace tinyasr::kernels {

// Standard product a[m x k] * b[k x n]; throws on inner-dim mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);

// y = x * w^T + b with w[out x in], b[out] (b may be empty).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Numerically stable softmax along `axis` of a 1-D or 2-D tensor.
// Max-subtraction guarantees no overflow for arbitrarily large logits.
Tensor softmax(const Tensor& x, int axis = -1);

// Last-dim layer norm: (x - mean) / sqrt(var + eps) * gamma + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);

struct MhaParams {
  Tensor wq, wk, wv, wo;  // each [d_model x d_model], stored [out x in]
};

// softmax(Q K^T / sqrt(d_head)) V per head, heads concatenated, output
// projected. `mask` (optional, [M x N]) is added to the scores before
// softmax; use large negatives to forbid positions.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const MhaParams& params, int n_heads,
                            const Tensor* mask = nullptr);

struct LstmParams {
  Tensor wx;  // [4H x Din]   gate order: input, forget, cell, output
  Tensor wh;  // [4H x H]
  Tensor b;   // [4H]
};

// One LSTM cell step: sigmoid gates, tanh candidate.
void lstm_step(const Tensor& x, const Tensor& h, const Tensor& c,
               const LstmParams& params, Tensor* h_out, Tensor* c_out);

// Runs lstm_step over the rows of xs[T x Din]; returns hidden states
// [T x H] starting from zero state.
Tensor lstm_seq(const Tensor& xs, const LstmParams& params);

// Single-channel 1-D cross-correlation. Output length:
//   out_len = (len + 2*pad - kernel) / stride + 1   (must be >= 1)
Tensor conv1d(const Tensor& x, const Tensor& kernel, int stride = 1, int pad = 0);

// Single-channel transposed convolution. Output length:
//   out_len = (len - 1) * stride + kernel - 2*pad
Tensor transposed_conv1d(const Tensor& x, const Tensor& kernel, int stride = 1,
                         int pad = 0);

// Multichannel convolution over time with same-padding.
// x[T x Din], w[width x Din x Dout] flattened as [width*Din x Dout],
// b[Dout] or empty; odd width required.
Tensor conv1d_time(const Tensor& x, const Tensor& w, const Tensor& b, int width);

// Non-overlapping multichannel transposed convolution over time:
// stride == kernel width == rate; x[T x Din] -> [T*rate x Dout] with
// out[t*rate + j] = x[t] * w_j + b, w[rate*Din x Dout].
Tensor tconv1d_time(const Tensor& x, const Tensor& w, const Tensor& b, int rate);

// Elementwise maps.
Tensor sigmoid(const Tensor& x);
Tensor tanh_t(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor add_rowvec(const Tensor& x, const Tensor& v);  // v broadcast over rows

// Sinusoidal positional encoding [len x dim], added to sequence inputs.
Tensor positional_encoding(int len, int dim);

// Per-position argmax over the last dim, ties broken by lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

// sum of all elements, f64 accumulation.
double sum_all(const Tensor& x);

}  // namespace tinyasr::kernels

#endif  // TINYASR_KERNELS_H_
