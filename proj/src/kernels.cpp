// tinyasr/kernels.cpp
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

#include "tinyasr/kernels.h"

#include <algorithm>
#include <cmath>

#include "tinyasr/simd.h"

namespace tinyasr::kernels {

namespace {

void Require2d(const Tensor& t, const char* what) {
  Check(t.rank() == 2 || t.rank() == 1, std::string(what) + ": expected 1-D or 2-D tensor");
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Check(a.rank() == 2 && b.rank() == 2, "matmul: operands must be 2-D");
  Check(a.dim(1) == b.dim(0), "matmul: inner dimensions differ, " + a.shape_str() +
                                  " vs " + b.shape_str());
  Tensor out({a.dim(0), b.dim(1)});
  simd::matmul_nn_f32(a.data(), b.data(), out.data(), a.dim(0), b.dim(1), a.dim(1));
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  Check(x.rank() <= 2 && w.rank() == 2, "linear: bad ranks");
  const int m = x.rows(), in = x.cols(), out = w.dim(0);
  Check(in == w.dim(1), "linear: input dim " + std::to_string(in) +
                            " vs weight " + w.shape_str());
  Tensor y({m, out});
  simd::matmul_nt_f32(x.data(), w.data(), y.data(), m, out, in);
  if (!b.empty()) {
    Check(b.numel() == out, "linear: bias size mismatch");
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < out; ++j) y.at(i, j) += b[j];
  }
  return y;
}

Tensor softmax(const Tensor& x, int axis) {
  Require2d(x, "softmax");
  const int rank = x.rank();
  if (axis < 0) axis += rank;
  Check(axis >= 0 && axis < rank, "softmax: axis out of range");
  if (rank == 1 || axis == 1) {
    const int rows = x.rows(), cols = x.cols();
    Check(cols > 0, "softmax: empty axis");
    Tensor out(x.shape());
    for (int i = 0; i < rows; ++i) {
      const float* row = x.data() + static_cast<int64_t>(i) * cols;
      float* orow = out.data() + static_cast<int64_t>(i) * cols;
      float mx = row[0];
      for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (int j = 0; j < cols; ++j) {
        orow[j] = std::exp(row[j] - mx);
        sum += orow[j];
      }
      const float inv = static_cast<float>(1.0 / sum);
      for (int j = 0; j < cols; ++j) orow[j] *= inv;
    }
    return out;
  }
  // axis == 0 on a 2-D tensor: softmax down the columns.
  const int rows = x.dim(0), cols = x.dim(1);
  Check(rows > 0, "softmax: empty axis");
  Tensor out(x.shape());
  for (int j = 0; j < cols; ++j) {
    float mx = x.at(0, j);
    for (int i = 1; i < rows; ++i) mx = std::max(mx, x.at(i, j));
    double sum = 0.0;
    for (int i = 0; i < rows; ++i) {
      out.at(i, j) = std::exp(x.at(i, j) - mx);
      sum += out.at(i, j);
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int i = 0; i < rows; ++i) out.at(i, j) *= inv;
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps) {
  Require2d(x, "layer_norm");
  const int rows = x.rows(), cols = x.cols();
  Check(gamma.numel() == cols && beta.numel() == cols, "layer_norm: affine size mismatch");
  Tensor out(x.shape());
  for (int i = 0; i < rows; ++i) {
    const float* row = x.data() + static_cast<int64_t>(i) * cols;
    float* orow = out.data() + static_cast<int64_t>(i) * cols;
    double mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += row[j];
    mean /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= cols;
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps));
    for (int j = 0; j < cols; ++j)
      orow[j] = (static_cast<float>(row[j] - mean) * inv) * gamma[j] + beta[j];
  }
  return out;
}

namespace {

Tensor SliceCols(const Tensor& x, int off, int n) {
  Tensor out({x.rows(), n});
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = x.at(i, off + j);
  return out;
}

}  // namespace

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const MhaParams& params, int n_heads,
                            const Tensor* mask) {
  const int d = q.cols();
  Check(d == k.cols() && d == v.cols(), "mha: model dims differ");
  Check(k.rows() == v.rows(), "mha: key/value counts differ");
  Check(d % n_heads == 0, "mha: model dim not divisible by n_heads");
  const Tensor no_bias;
  Tensor qp = linear(q, params.wq, no_bias);
  Tensor kp = linear(k, params.wk, no_bias);
  Tensor vp = linear(v, params.wv, no_bias);
  const int dh = d / n_heads;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));
  Tensor concat({q.rows(), d});
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = SliceCols(qp, h * dh, dh);
    Tensor kh = SliceCols(kp, h * dh, dh);
    Tensor vh = SliceCols(vp, h * dh, dh);
    Tensor scores({qh.rows(), kh.rows()});
    simd::matmul_nt_f32(qh.data(), kh.data(), scores.data(), qh.rows(), kh.rows(), dh);
    for (auto& s : scores.vec()) s *= inv_sqrt;
    if (mask) {
      Check(mask->rows() == scores.rows() && mask->cols() == scores.cols(),
            "mha: mask shape mismatch");
      for (int64_t i = 0; i < scores.numel(); ++i) scores[i] += (*mask)[i];
    }
    Tensor attn = softmax(scores, -1);
    Tensor oh = matmul(attn, vh);
    for (int i = 0; i < oh.rows(); ++i)
      for (int j = 0; j < dh; ++j) concat.at(i, h * dh + j) = oh.at(i, j);
  }
  return linear(concat, params.wo, no_bias);
}

void lstm_step(const Tensor& x, const Tensor& h, const Tensor& c,
               const LstmParams& params, Tensor* h_out, Tensor* c_out) {
  const int hidden = params.wh.dim(1);
  Check(params.wx.dim(0) == 4 * hidden && params.wh.dim(0) == 4 * hidden,
        "lstm_step: gate weight shapes");
  Check(x.cols() == params.wx.dim(1), "lstm_step: input dim mismatch");
  Check(h.numel() == hidden && c.numel() == hidden, "lstm_step: state dim mismatch");
  Tensor gates = linear(x, params.wx, params.b);
  Tensor hg = linear(h, params.wh, Tensor());
  for (int64_t i = 0; i < gates.numel(); ++i) gates[i] += hg[i];
  *h_out = Tensor({1, hidden});
  *c_out = Tensor({1, hidden});
  for (int j = 0; j < hidden; ++j) {
    const float ig = 1.0f / (1.0f + std::exp(-gates[j]));
    const float fg = 1.0f / (1.0f + std::exp(-gates[hidden + j]));
    const float gg = std::tanh(gates[2 * hidden + j]);
    const float og = 1.0f / (1.0f + std::exp(-gates[3 * hidden + j]));
    const float cv = fg * c[j] + ig * gg;
    (*c_out)[j] = cv;
    (*h_out)[j] = og * std::tanh(cv);
  }
}

Tensor lstm_seq(const Tensor& xs, const LstmParams& params) {
  const int hidden = params.wh.dim(1);
  Tensor h({1, hidden}), c({1, hidden});
  Tensor out({std::max(xs.rows(), 1), hidden});
  for (int t = 0; t < xs.rows(); ++t) {
    Tensor xt({1, xs.cols()});
    for (int j = 0; j < xs.cols(); ++j) xt[j] = xs.at(t, j);
    Tensor hn, cn;
    lstm_step(xt, h, c, params, &hn, &cn);
    h = hn;
    c = cn;
    for (int j = 0; j < hidden; ++j) out.at(t, j) = h[j];
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, int stride, int pad) {
  Check(x.rank() == 1 && kernel.rank() == 1, "conv1d: expected 1-D tensors");
  Check(stride >= 1 && pad >= 0, "conv1d: invalid geometry");
  const int len = x.dim(0), kw = kernel.dim(0);
  const int padded = len + 2 * pad;
  Check(kw <= padded, "conv1d: kernel larger than padded input");
  const int out_len = (padded - kw) / stride + 1;
  Tensor out({out_len});
  for (int o = 0; o < out_len; ++o) {
    double acc = 0.0;
    for (int j = 0; j < kw; ++j) {
      const int idx = o * stride + j - pad;
      if (idx >= 0 && idx < len) acc += static_cast<double>(x[idx]) * kernel[j];
    }
    out[o] = static_cast<float>(acc);
  }
  return out;
}

Tensor transposed_conv1d(const Tensor& x, const Tensor& kernel, int stride, int pad) {
  Check(x.rank() == 1 && kernel.rank() == 1, "transposed_conv1d: expected 1-D tensors");
  Check(stride >= 1 && pad >= 0, "transposed_conv1d: invalid geometry");
  const int len = x.dim(0), kw = kernel.dim(0);
  const int out_len = (len - 1) * stride + kw - 2 * pad;
  Check(out_len >= 1, "transposed_conv1d: empty output");
  Tensor out({out_len});
  for (int i = 0; i < len; ++i)
    for (int j = 0; j < kw; ++j) {
      const int o = i * stride + j - pad;
      if (o >= 0 && o < out_len) out[o] += x[i] * kernel[j];
    }
  return out;
}

Tensor conv1d_time(const Tensor& x, const Tensor& w, const Tensor& b, int width) {
  Check(width % 2 == 1, "conv1d_time: width must be odd");
  const int t_len = x.rows(), din = x.cols();
  Check(w.dim(0) == width * din, "conv1d_time: weight rows != width*din");
  const int dout = w.dim(1);
  const int half = width / 2;
  // Build the im2col matrix [T x width*din] with zero padding, then one GEMM.
  Tensor cols({t_len, width * din});
  for (int t = 0; t < t_len; ++t)
    for (int ww = 0; ww < width; ++ww) {
      const int src = t + ww - half;
      if (src < 0 || src >= t_len) continue;
      for (int j = 0; j < din; ++j) cols.at(t, ww * din + j) = x.at(src, j);
    }
  Tensor y = matmul(cols, w);
  if (!b.empty())
    for (int t = 0; t < t_len; ++t)
      for (int j = 0; j < dout; ++j) y.at(t, j) += b[j];
  return y;
}

Tensor tconv1d_time(const Tensor& x, const Tensor& w, const Tensor& b, int rate) {
  const int t_len = x.rows(), din = x.cols();
  Check(w.dim(0) == rate * din, "tconv1d_time: weight rows != rate*din");
  const int dout = w.dim(1);
  Tensor out({t_len * rate, dout});
  // Phase j uses the [j*din, (j+1)*din) block of w; stride == width so
  // output frames do not overlap.
  for (int j = 0; j < rate; ++j) {
    Tensor wj({din, dout});
    for (int i = 0; i < din; ++i)
      for (int o = 0; o < dout; ++o) wj.at(i, o) = w.at(j * din + i, o);
    Tensor yj = matmul(x, wj);
    for (int t = 0; t < t_len; ++t)
      for (int o = 0; o < dout; ++o)
        out.at(t * rate + j, o) = yj.at(t, o) + (b.empty() ? 0.0f : b[o]);
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = 1.0f / (1.0f + std::exp(-x[i]));
  return out;
}

Tensor tanh_t(const Tensor& x) {
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Check(a.same_shape(b), "add: shape mismatch");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Check(a.same_shape(b), "mul: shape mismatch");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor scale(const Tensor& a, float s) {
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  Check(v.numel() == x.cols(), "add_rowvec: size mismatch");
  Tensor out(x.shape());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j) + v[j];
  return out;
}

Tensor positional_encoding(int len, int dim) {
  Tensor pe({len, dim});
  for (int t = 0; t < len; ++t)
    for (int j = 0; j < dim; j += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / dim);
      pe.at(t, j) = static_cast<float>(std::sin(t * freq));
      if (j + 1 < dim) pe.at(t, j + 1) = static_cast<float>(std::cos(t * freq));
    }
  return pe;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

double sum_all(const Tensor& x) {
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += x[i];
  return s;
}

}  // namespace tinyasr::kernels
