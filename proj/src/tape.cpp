// tinyasr/tape.cpp
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

#include "tinyasr/tape.h"

#include <cmath>
#include <memory>

#include "tinyasr/cif.h"
#include "tinyasr/kernels.h"
#include "tinyasr/simd.h"

namespace tinyasr {

namespace {

Tensor TransposeT(const Tensor& x) {
  Tensor out({x.cols(), x.rows()});
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out.at(j, i) = x.at(i, j);
  return out;
}

}  // namespace

int Tape::push(Tensor v, std::function<void(Tape&, const Tensor&)> back) {
  nodes_.push_back(Node{std::move(v), Tensor(), false, std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.seen) {
    n.grad = Tensor(n.val.shape());
    n.seen = true;
  }
  return n.grad;
}

void Tape::accum(int id, const Tensor& g) {
  Tensor& buf = grad_buf(id);
  simd::axpy_f32(1.0f, g.data(), buf.data(), static_cast<int>(buf.numel()));
}

int Tape::leaf(const Tensor& v) { return push(v); }
int Tape::constant(const Tensor& v) { return push(v); }

int Tape::matmul(int a, int b) {
  Tensor y = kernels::matmul(val(a), val(b));
  return push(std::move(y), [a, b](Tape& t, const Tensor& g) {
    // da = g * b^T; db = a^T * g
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor da({av.rows(), av.cols()});
    simd::matmul_nt_f32(g.data(), bv.data(), da.data(), g.rows(), bv.rows(), g.cols());
    t.accum(a, da);
    Tensor at = TransposeT(av);
    Tensor db = kernels::matmul(at, g);
    t.accum(b, db);
  });
}

int Tape::linear(int x, int w, int b) {
  Tensor y = kernels::linear(val(x), val(w), b >= 0 ? val(b) : Tensor());
  return push(std::move(y), [x, w, b](Tape& t, const Tensor& g) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    // dx = g * W
    Tensor dx({xv.rows(), xv.cols()});
    simd::matmul_nn_f32(g.data(), wv.data(), dx.data(), g.rows(), wv.dim(1), g.cols());
    t.accum(x, dx);
    // dW = g^T * x
    Tensor gt = TransposeT(g);
    Tensor dw = kernels::matmul(gt, xv);
    t.accum(w, dw);
    if (b >= 0) {
      Tensor db({g.cols()});
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) db[j] += g.at(i, j);
      t.accum(b, db);
    }
  });
}

int Tape::transpose(int x) {
  return push(TransposeT(val(x)), [x](Tape& t, const Tensor& g) {
    t.accum(x, TransposeT(g));
  });
}

int Tape::add(int a, int b) {
  return push(kernels::add(val(a), val(b)), [a, b](Tape& t, const Tensor& g) {
    t.accum(a, g);
    t.accum(b, g);
  });
}

int Tape::mul(int a, int b) {
  return push(kernels::mul(val(a), val(b)), [a, b](Tape& t, const Tensor& g) {
    t.accum(a, kernels::mul(g, t.val(b)));
    t.accum(b, kernels::mul(g, t.val(a)));
  });
}

int Tape::scale(int a, float s) {
  return push(kernels::scale(val(a), s), [a, s](Tape& t, const Tensor& g) {
    t.accum(a, kernels::scale(g, s));
  });
}

int Tape::add_rowvec(int x, int v) {
  return push(kernels::add_rowvec(val(x), val(v)), [x, v](Tape& t, const Tensor& g) {
    t.accum(x, g);
    Tensor dv(t.val(v).shape());
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) dv[j] += g.at(i, j);
    t.accum(v, dv);
  });
}

int Tape::add_const(int x, const Tensor& c) {
  Check(val(x).numel() == c.numel(), "add_const: shape mismatch");
  Tensor y = val(x);
  for (int64_t i = 0; i < y.numel(); ++i) y[i] += c[i];
  return push(std::move(y), [x](Tape& t, const Tensor& g) { t.accum(x, g); });
}

int Tape::sigmoid(int x) {
  Tensor y = kernels::sigmoid(val(x));
  int id = push(std::move(y));
  nodes_[id].back = [x, id](Tape& t, const Tensor& g) {
    const Tensor& yv = t.val(id);
    Tensor dx(yv.shape());
    for (int64_t i = 0; i < yv.numel(); ++i) dx[i] = g[i] * yv[i] * (1.0f - yv[i]);
    t.accum(x, dx);
  };
  return id;
}

int Tape::tanh_(int x) {
  Tensor y = kernels::tanh_t(val(x));
  int id = push(std::move(y));
  nodes_[id].back = [x, id](Tape& t, const Tensor& g) {
    const Tensor& yv = t.val(id);
    Tensor dx(yv.shape());
    for (int64_t i = 0; i < yv.numel(); ++i) dx[i] = g[i] * (1.0f - yv[i] * yv[i]);
    t.accum(x, dx);
  };
  return id;
}

int Tape::relu(int x) {
  Tensor y = kernels::relu(val(x));
  return push(std::move(y), [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.val(x);
    Tensor dx(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i) dx[i] = xv[i] > 0.0f ? g[i] : 0.0f;
    t.accum(x, dx);
  });
}

int Tape::concat_cols(int a, int b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  Check(av.rows() == bv.rows(), "concat_cols: row mismatch");
  Tensor y({av.rows(), av.cols() + bv.cols()});
  for (int i = 0; i < av.rows(); ++i) {
    for (int j = 0; j < av.cols(); ++j) y.at(i, j) = av.at(i, j);
    for (int j = 0; j < bv.cols(); ++j) y.at(i, av.cols() + j) = bv.at(i, j);
  }
  const int ac = av.cols(), bc = bv.cols();
  return push(std::move(y), [a, b, ac, bc](Tape& t, const Tensor& g) {
    Tensor da({g.rows(), ac}), db({g.rows(), bc});
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < ac; ++j) da.at(i, j) = g.at(i, j);
      for (int j = 0; j < bc; ++j) db.at(i, j) = g.at(i, ac + j);
    }
    t.accum(a, da);
    t.accum(b, db);
  });
}

int Tape::slice_cols(int x, int off, int n) {
  const Tensor& xv = val(x);
  Check(off >= 0 && off + n <= xv.cols(), "slice_cols: out of range");
  Tensor y({xv.rows(), n});
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < n; ++j) y.at(i, j) = xv.at(i, off + j);
  return push(std::move(y), [x, off, n](Tape& t, const Tensor& g) {
    Tensor dx(t.val(x).shape());
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < n; ++j) dx.at(i, off + j) = g.at(i, j);
    t.accum(x, dx);
  });
}

int Tape::concat_rows(const std::vector<int>& parts) {
  Check(!parts.empty(), "concat_rows: empty");
  int rows = 0;
  const int cols = val(parts[0]).cols();
  for (int p : parts) rows += val(p).rows();
  Tensor y({rows, cols});
  int r = 0;
  for (int p : parts) {
    const Tensor& pv = val(p);
    for (int i = 0; i < pv.rows(); ++i, ++r)
      for (int j = 0; j < cols; ++j) y.at(r, j) = pv.at(i, j);
  }
  return push(std::move(y), [parts](Tape& t, const Tensor& g) {
    int r = 0;
    for (int p : parts) {
      const Tensor& pv = t.val(p);
      Tensor dp(pv.shape());
      for (int i = 0; i < pv.rows(); ++i, ++r)
        for (int j = 0; j < pv.cols(); ++j) dp.at(i, j) = g.at(r, j);
      t.accum(p, dp);
    }
  });
}

int Tape::gather_rows(int table, std::vector<int> ids) {
  const Tensor& tv = val(table);
  Tensor y({static_cast<int>(ids.size()), tv.cols()});
  for (size_t i = 0; i < ids.size(); ++i) {
    Check(ids[i] >= 0 && ids[i] < tv.rows(), "gather_rows: id out of range");
    for (int j = 0; j < tv.cols(); ++j) y.at(static_cast<int>(i), j) = tv.at(ids[i], j);
  }
  return push(std::move(y), [table, ids = std::move(ids)](Tape& t, const Tensor& g) {
    Tensor dt(t.val(table).shape());
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < g.cols(); ++j)
        dt.at(ids[i], j) += g.at(static_cast<int>(i), j);
    t.accum(table, dt);
  });
}

int Tape::replace_rows(int x, int y, std::vector<uint8_t> use_y) {
  const Tensor& xv = val(x);
  const Tensor& yv = val(y);
  Check(xv.same_shape(yv), "replace_rows: shape mismatch");
  Check(static_cast<int>(use_y.size()) == xv.rows(), "replace_rows: mask size");
  Tensor out = xv;
  for (int i = 0; i < xv.rows(); ++i)
    if (use_y[i])
      for (int j = 0; j < xv.cols(); ++j) out.at(i, j) = yv.at(i, j);
  return push(std::move(out), [x, y, use_y = std::move(use_y)](Tape& t, const Tensor& g) {
    Tensor dx(g.shape()), dy(g.shape());
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j)
        (use_y[i] ? dy : dx).at(i, j) = g.at(i, j);
    t.accum(x, dx);
    t.accum(y, dy);
  });
}

int Tape::softmax_rows(int x) {
  Tensor y = kernels::softmax(val(x), -1);
  int id = push(std::move(y));
  nodes_[id].back = [x, id](Tape& t, const Tensor& g) {
    const Tensor& yv = t.val(id);
    Tensor dx(yv.shape());
    for (int i = 0; i < yv.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < yv.cols(); ++j) dot += static_cast<double>(g.at(i, j)) * yv.at(i, j);
      for (int j = 0; j < yv.cols(); ++j)
        dx.at(i, j) = yv.at(i, j) * (g.at(i, j) - static_cast<float>(dot));
    }
    t.accum(x, dx);
  };
  return id;
}

int Tape::layer_norm(int x, int gamma, int beta, float eps) {
  const Tensor& xv = val(x);
  Tensor y = kernels::layer_norm(xv, val(gamma), val(beta), eps);
  return push(std::move(y), [x, gamma, beta, eps](Tape& t, const Tensor& g) {
    const Tensor& xv = t.val(x);
    const Tensor& gm = t.val(gamma);
    const int rows = xv.rows(), cols = xv.cols();
    Tensor dx(xv.shape()), dgamma(gm.shape()), dbeta(gm.shape());
    for (int i = 0; i < rows; ++i) {
      double mean = 0.0;
      for (int j = 0; j < cols; ++j) mean += xv.at(i, j);
      mean /= cols;
      double var = 0.0;
      for (int j = 0; j < cols; ++j) {
        const double d = xv.at(i, j) - mean;
        var += d * d;
      }
      var /= cols;
      const double inv = 1.0 / std::sqrt(var + eps);
      // xhat_j = (x_j - mean) * inv; y = xhat * gamma + beta
      double sum_gx = 0.0, sum_gxx = 0.0;
      for (int j = 0; j < cols; ++j) {
        const double xhat = (xv.at(i, j) - mean) * inv;
        const double gj = static_cast<double>(g.at(i, j)) * gm[j];
        sum_gx += gj;
        sum_gxx += gj * xhat;
        dgamma[j] += g.at(i, j) * static_cast<float>(xhat);
        dbeta[j] += g.at(i, j);
      }
      for (int j = 0; j < cols; ++j) {
        const double xhat = (xv.at(i, j) - mean) * inv;
        const double gj = static_cast<double>(g.at(i, j)) * gm[j];
        dx.at(i, j) = static_cast<float>(inv * (gj - sum_gx / cols - xhat * sum_gxx / cols));
      }
    }
    t.accum(x, dx);
    t.accum(gamma, dgamma);
    t.accum(beta, dbeta);
  });
}

int Tape::conv1d_time(int x, int w, int b, int width) {
  const Tensor& xv = val(x);
  const int t_len = xv.rows(), din = xv.cols(), half = width / 2;
  Tensor y = kernels::conv1d_time(xv, val(w), b >= 0 ? val(b) : Tensor(), width);
  return push(std::move(y), [x, w, b, width, t_len, din, half](Tape& t, const Tensor& g) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    const int dout = wv.dim(1);
    // Rebuild im2col, then dW = cols^T g, dcols = g W^T scattered back.
    Tensor cols({t_len, width * din});
    for (int tt = 0; tt < t_len; ++tt)
      for (int ww = 0; ww < width; ++ww) {
        const int src = tt + ww - half;
        if (src < 0 || src >= t_len) continue;
        for (int j = 0; j < din; ++j) cols.at(tt, ww * din + j) = xv.at(src, j);
      }
    Tensor ct = TransposeT(cols);
    t.accum(w, kernels::matmul(ct, g));
    // dcols = g * w^T; w rows are already contiguous over dout.
    Tensor dcols({t_len, width * din});
    simd::matmul_nt_f32(g.data(), wv.data(), dcols.data(), t_len, width * din, dout);
    Tensor dx(xv.shape());
    for (int tt = 0; tt < t_len; ++tt)
      for (int ww = 0; ww < width; ++ww) {
        const int src = tt + ww - half;
        if (src < 0 || src >= t_len) continue;
        for (int j = 0; j < din; ++j) dx.at(src, j) += dcols.at(tt, ww * din + j);
      }
    t.accum(x, dx);
    if (b >= 0) {
      Tensor db({dout});
      for (int tt = 0; tt < t_len; ++tt)
        for (int j = 0; j < dout; ++j) db[j] += g.at(tt, j);
      t.accum(b, db);
    }
  });
}

int Tape::tconv1d_time(int x, int w, int b, int rate) {
  const Tensor& xv = val(x);
  Tensor y = kernels::tconv1d_time(xv, val(w), b >= 0 ? val(b) : Tensor(), rate);
  return push(std::move(y), [x, w, b, rate](Tape& t, const Tensor& g) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    const int t_len = xv.rows(), din = xv.cols(), dout = wv.dim(1);
    Tensor dx(xv.shape());
    Tensor dw(wv.shape());
    for (int j = 0; j < rate; ++j) {
      // Phase j sees g rows {j, rate+j, ...}: gj[t] = g[t*rate + j].
      Tensor gj({t_len, dout});
      for (int tt = 0; tt < t_len; ++tt)
        for (int o = 0; o < dout; ++o) gj.at(tt, o) = g.at(tt * rate + j, o);
      // dx += gj * wj^T; dwj = x^T gj
      Tensor wj({din, dout});
      for (int i = 0; i < din; ++i)
        for (int o = 0; o < dout; ++o) wj.at(i, o) = wv.at(j * din + i, o);
      Tensor wjt = TransposeT(wj);
      Tensor dxj = kernels::matmul(gj, wjt);
      for (int64_t i = 0; i < dx.numel(); ++i) dx[i] += dxj[i];
      Tensor xt = TransposeT(xv);
      Tensor dwj = kernels::matmul(xt, gj);
      for (int i = 0; i < din; ++i)
        for (int o = 0; o < dout; ++o) dw.at(j * din + i, o) += dwj.at(i, o);
    }
    t.accum(x, dx);
    t.accum(w, dw);
    if (b >= 0) {
      Tensor db({dout});
      for (int r = 0; r < g.rows(); ++r)
        for (int o = 0; o < dout; ++o) db[o] += g.at(r, o);
      t.accum(b, db);
    }
  });
}

int Tape::scale_to_sum(int x, float target) {
  const Tensor& xv = val(x);
  const double s = kernels::sum_all(xv);
  Check(s > 0.0, "scale_to_sum: sum is zero");
  const float f = static_cast<float>(target / s);
  Tensor y = kernels::scale(xv, f);
  return push(std::move(y), [x, target, s](Tape& t, const Tensor& g) {
    const Tensor& xv = t.val(x);
    // y_j = c x_j / S: dx_i = c/S g_i - c/S^2 (g . x)
    double gx = 0.0;
    for (int64_t i = 0; i < xv.numel(); ++i) gx += static_cast<double>(g[i]) * xv[i];
    const double c_s = target / s;
    const double corr = target * gx / (s * s);
    Tensor dx(xv.shape());
    for (int64_t i = 0; i < xv.numel(); ++i)
      dx[i] = static_cast<float>(c_s * g[i] - corr);
    t.accum(x, dx);
  });
}

int Tape::cif_embed(int hidden, int alphas, float threshold, int force_n) {
  const Tensor& hv = val(hidden);
  cif::Result res = cif::integrate(hv, val(alphas), threshold, force_n);
  Check(res.n_tokens > 0, "cif_embed: no tokens emitted");
  Tensor y = res.embeddings;
  auto uses = std::make_shared<std::vector<cif::Use>>(std::move(res.uses));
  return push(std::move(y), [hidden, alphas, uses](Tape& t, const Tensor& g) {
    const Tensor& hv = t.val(hidden);
    const Tensor& av = t.val(alphas);
    const int t_len = hv.rows(), d = hv.cols();
    Tensor dh(hv.shape());
    Tensor da(av.shape());
    // pre[t] spreads a gradient onto every alpha[u], u <= t (prefix-sum
    // dependence of fire/carry weights); resolved by one suffix sum.
    std::vector<double> pre(t_len, 0.0);
    for (const cif::Use& u : *uses) {
      const float* ht = hv.data() + static_cast<int64_t>(u.frame) * d;
      const float* gj = g.data() + static_cast<int64_t>(u.token) * d;
      // d emb_token / d w = h[frame]
      double gdot = 0.0;
      for (int i = 0; i < d; ++i) gdot += static_cast<double>(gj[i]) * ht[i];
      simd::axpy_f32(u.weight, gj,
                     dh.data() + static_cast<int64_t>(u.frame) * d, d);
      switch (u.kind) {
        case cif::Use::kFull:
          da[u.frame] += static_cast<float>(gdot);
          break;
        case cif::Use::kFire:  // w = j*thr - S_{t-1}
          if (u.frame > 0) pre[u.frame - 1] -= gdot;
          break;
        case cif::Use::kCarry:  // w = S_t - j*thr
          pre[u.frame] += gdot;
          break;
        case cif::Use::kConst:
          break;
      }
    }
    double suffix = 0.0;
    for (int tt = t_len - 1; tt >= 0; --tt) {
      suffix += pre[tt];
      da[tt] += static_cast<float>(suffix);
    }
    t.accum(hidden, dh);
    t.accum(alphas, da);
  });
}

int Tape::sum_all(int x) {
  Tensor y = Tensor::Scalar(static_cast<float>(kernels::sum_all(val(x))));
  return push(std::move(y), [x](Tape& t, const Tensor& g) {
    Tensor dx(t.val(x).shape());
    dx.fill(g[0]);
    t.accum(x, dx);
  });
}

int Tape::abs_minus(int s, float c) {
  const float v = val(s)[0];
  Tensor y = Tensor::Scalar(std::fabs(v - c));
  return push(std::move(y), [s, c](Tape& t, const Tensor& g) {
    const float v = t.val(s)[0];
    Tensor ds({1});
    ds[0] = (v >= c ? 1.0f : -1.0f) * g[0];
    t.accum(s, ds);
  });
}

int Tape::weighted_sum(const std::vector<int>& scalars, const std::vector<float>& w) {
  Check(scalars.size() == w.size() && !scalars.empty(), "weighted_sum: arity");
  double acc = 0.0;
  for (size_t i = 0; i < scalars.size(); ++i) acc += static_cast<double>(w[i]) * val(scalars[i])[0];
  return push(Tensor::Scalar(static_cast<float>(acc)),
              [scalars, w](Tape& t, const Tensor& g) {
                for (size_t i = 0; i < scalars.size(); ++i)
                  t.accum(scalars[i], Tensor::Scalar(g[0] * w[i]));
              });
}

int Tape::ce_loss(int logits, const std::vector<int>& targets, float smoothing) {
  const Tensor& lv = val(logits);
  const int n = lv.rows(), v = lv.cols();
  Check(static_cast<int>(targets.size()) == n, "ce_loss: target length mismatch");
  Tensor probs = kernels::softmax(lv, -1);
  double loss = 0.0;
  const double off = smoothing / v;
  const double on = 1.0 - smoothing + off;
  for (int i = 0; i < n; ++i) {
    Check(targets[i] >= 0 && targets[i] < v, "ce_loss: target id out of range");
    for (int j = 0; j < v; ++j) {
      const double q = (j == targets[i]) ? on : off;
      if (q > 0.0) loss -= q * std::log(std::max(1e-30, static_cast<double>(probs.at(i, j))));
    }
  }
  loss /= n;
  auto saved = std::make_shared<Tensor>(std::move(probs));
  auto tgt = std::make_shared<std::vector<int>>(targets);
  return push(Tensor::Scalar(static_cast<float>(loss)),
              [logits, saved, tgt, smoothing, n, v](Tape& t, const Tensor& g) {
                const double off = smoothing / v;
                const double on = 1.0 - smoothing + off;
                Tensor dl(t.val(logits).shape());
                const float gn = g[0] / n;
                for (int i = 0; i < n; ++i)
                  for (int j = 0; j < v; ++j) {
                    const double q = (j == (*tgt)[i]) ? on : off;
                    dl.at(i, j) = gn * static_cast<float>(saved->at(i, j) - q);
                  }
                t.accum(logits, dl);
              });
}

int Tape::bce_logits(int logits, std::vector<float> targets) {
  const Tensor& lv = val(logits);
  const int64_t n = lv.numel();
  Check(static_cast<int64_t>(targets.size()) == n, "bce_logits: target size mismatch");
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double x = lv[i], y = targets[i];
    // log(1 + e^x) - y x, computed stably
    loss += (x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x))) - y * x;
  }
  loss /= static_cast<double>(n);
  return push(Tensor::Scalar(static_cast<float>(loss)),
              [logits, targets = std::move(targets), n](Tape& t, const Tensor& g) {
                const Tensor& lv = t.val(logits);
                Tensor dl(lv.shape());
                const float gn = g[0] / static_cast<float>(n);
                for (int64_t i = 0; i < n; ++i) {
                  const float p = 1.0f / (1.0f + std::exp(-lv[i]));
                  dl[i] = gn * (p - targets[i]);
                }
                t.accum(logits, dl);
              });
}

void Tape::backward(int root) {
  Check(root >= 0 && root < size(), "backward: bad root");
  Check(nodes_[root].val.numel() == 1, "backward: loss root must be scalar");
  // Leaf gradients (no back fn) persist and accumulate across calls;
  // interior gradients are per-sweep scratch.
  for (Node& n : nodes_) {
    if (n.back && n.seen) {
      n.seen = false;
      n.grad = Tensor();
    }
  }
  grad_buf(root)[0] += 1.0f;
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.seen && n.back) n.back(*this, n.grad);
  }
}

void Tape::zero_grads() {
  for (Node& n : nodes_) {
    n.seen = false;
    n.grad = Tensor();
  }
}

}  // namespace tinyasr
