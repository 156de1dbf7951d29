// tinyasr/paraformer.cpp
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

#include "tinyasr/paraformer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tinyasr/contextual.h"
#include "tinyasr/kernels.h"
#include "tinyasr/simd.h"

namespace tinyasr {

using namespace kernels;  // NOLINT

Tensor FloatExec::Apply(const std::string& /*name*/, const Tensor& x,
                        const Tensor& w, const Tensor& b) {
  if (b.numel() == 0) {
    Tensor y({x.dim(0), w.dim(0)});
    simd::matmul_nt_f32(x.data(), w.data(), y.data(), x.dim(0), w.dim(0),
                        x.dim(1));
    return y;
  }
  return linear(x, w, b);
}

namespace {

Tensor NoBias() { return Tensor({0}); }

void AddMatrix(Tensor* w, const std::vector<int>& shape, float std_dev,
               Rng& rng) {
  *w = Tensor(shape);
  for (int64_t i = 0; i < w->numel(); ++i)
    (*w)[i] = std_dev * static_cast<float>(rng.normal());
}

}  // namespace

AsrModel AsrModel::Init(const AsrConfig& cfg, Rng& rng) {
  AsrModel m;
  m.cfg = cfg;
  const int d = cfg.d_model, f = cfg.d_ffn, v = cfg.vocab;
  const int in_dim = cfg.feat_dim * cfg.lfr_m;
  auto mat = [&](const std::string& name, std::vector<int> shape) {
    const float std_dev = 1.0f / std::sqrt(static_cast<float>(shape.back()));
    AddMatrix(&m.params[name], shape, std_dev, rng);
  };
  auto zeros = [&](const std::string& name, std::vector<int> shape) {
    m.params[name] = Tensor(std::move(shape));
  };
  auto ln = [&](const std::string& name) {
    m.params[name + ".g"] = Tensor({d});
    m.params[name + ".g"].fill(1.0f);
    zeros(name + ".b", {d});
  };
  auto attn = [&](const std::string& p) {
    mat(p + ".wq", {d, d});
    mat(p + ".wk", {d, d});
    mat(p + ".wv", {d, d});
    mat(p + ".wo", {d, d});
  };
  auto ffn = [&](const std::string& p) {
    mat(p + ".w1", {f, d});
    zeros(p + ".b1", {f});
    mat(p + ".w2", {d, f});
    zeros(p + ".b2", {d});
  };
  auto lstm = [&](const std::string& p, int din, int h) {
    mat(p + ".wx", {4 * h, din});
    mat(p + ".wh", {4 * h, h});
    zeros(p + ".b", {4 * h});
  };

  mat("in_proj.w", {d, in_dim});
  zeros("in_proj.b", {d});
  for (int i = 0; i < cfg.n_enc_layers; ++i) {
    const std::string p = "enc" + std::to_string(i);
    ln(p + ".ln1");
    attn(p + ".att");
    ln(p + ".ln2");
    ffn(p + ".ffn");
  }
  ln("enc.ln_out");

  mat("pred.conv.w", {cfg.pred_width * d, d});
  zeros("pred.conv.b", {d});
  mat("pred.out.w", {1, d});
  zeros("pred.out.b", {1});

  AddMatrix(&m.params["dec.embed"], {v, d}, 1.0f, rng);
  for (int i = 0; i < cfg.n_dec_layers; ++i) {
    const std::string p = "dec" + std::to_string(i);
    ln(p + ".ln1");
    attn(p + ".att");
    ln(p + ".ln2");
    ffn(p + ".ffn");
  }
  lstm("hw.lstm", d, d);
  mat("ctx.wcq", {d, d});
  mat("ctx.wck", {d, d});
  mat("ctx.wcv", {d, d});
  mat("ctx.wsq", {d, d});
  mat("ctx.wsk", {d, d});
  mat("ctx.wsv", {d, d});
  mat("ctx.comb.w", {d, 2 * d});
  zeros("ctx.comb.b", {d});
  ln("dec.ln_out");
  mat("out.w", {v, d});
  zeros("out.b", {v});

  mat("ts.tconv.w", {cfg.upsample_rate * d, d});
  zeros("ts.tconv.b", {d});
  lstm("ts.lstm", d, cfg.ts_hidden);
  mat("ts.out.w", {1, cfg.ts_hidden});
  zeros("ts.out.b", {1});
  return m;
}

const Tensor& AsrModel::P(const std::string& name) const {
  auto it = params.find(name);
  Check(it != params.end(), "model: missing parameter " + name);
  return it->second;
}

std::vector<std::string> AsrModel::LinearLayerNames() const {
  std::vector<std::string> names = {"in_proj"};
  for (int i = 0; i < cfg.n_enc_layers; ++i) {
    const std::string p = "enc" + std::to_string(i);
    for (const char* s : {".att.wq", ".att.wk", ".att.wv", ".att.wo",
                          ".ffn.w1", ".ffn.w2"})
      names.push_back(p + s);
  }
  names.push_back("pred.out");
  for (int i = 0; i < cfg.n_dec_layers; ++i) {
    const std::string p = "dec" + std::to_string(i);
    for (const char* s : {".att.wq", ".att.wk", ".att.wv", ".att.wo",
                          ".ffn.w1", ".ffn.w2"})
      names.push_back(p + s);
  }
  for (const char* s :
       {"ctx.wcq", "ctx.wck", "ctx.wcv", "ctx.wsq", "ctx.wsk", "ctx.wsv",
        "ctx.comb", "out", "ts.out"})
    names.emplace_back(s);
  return names;
}

namespace {

// Attention with exec-routed projections. Layer names are
// <prefix>.wq/.wk/.wv and, when with_output_proj, <prefix>.wo.
// Projection-weight parameter names must equal the layer names.
Tensor AttentionExec(const AsrModel& m, const std::string& prefix,
                     const Tensor& q_in, const Tensor& kv_in, int n_heads,
                     bool with_output_proj, LinearExec& exec) {
  const Tensor q = exec.Apply(prefix + ".wq", q_in, m.P(prefix + ".wq"),
                              NoBias());
  const Tensor k = exec.Apply(prefix + ".wk", kv_in, m.P(prefix + ".wk"),
                              NoBias());
  const Tensor v = exec.Apply(prefix + ".wv", kv_in, m.P(prefix + ".wv"),
                              NoBias());
  const int d = q.dim(1), nq = q.dim(0), nk = k.dim(0);
  Check(d % n_heads == 0, "attention: heads must divide dim");
  const int dh = d / n_heads;
  const float inv = 1.0f / std::sqrt(static_cast<float>(dh));

  Tensor out({nq, d});
  Tensor qh({nq, dh}), kh({nk, dh}), vh({nk, dh}), scores({nq, nk});
  for (int h = 0; h < n_heads; ++h) {
    for (int r = 0; r < nq; ++r)
      for (int c = 0; c < dh; ++c) qh.at(r, c) = q.at(r, h * dh + c) * inv;
    for (int r = 0; r < nk; ++r)
      for (int c = 0; c < dh; ++c) {
        kh.at(r, c) = k.at(r, h * dh + c);
        vh.at(r, c) = v.at(r, h * dh + c);
      }
    simd::matmul_nt_f32(qh.data(), kh.data(), scores.data(), nq, nk, dh);
    const Tensor probs = softmax(scores);
    Tensor ctx({nq, dh});
    simd::matmul_nn_f32(probs.data(), vh.data(), ctx.data(), nq, dh, nk);
    for (int r = 0; r < nq; ++r)
      for (int c = 0; c < dh; ++c) out.at(r, h * dh + c) = ctx.at(r, c);
  }
  if (!with_output_proj) return out;
  return exec.Apply(prefix + ".wo", out, m.P(prefix + ".wo"), NoBias());
}

Tensor FfnExec(const AsrModel& m, const std::string& prefix, const Tensor& x,
               LinearExec& exec) {
  const Tensor h = relu(
      exec.Apply(prefix + ".w1", x, m.P(prefix + ".w1"), m.P(prefix + ".b1")));
  return exec.Apply(prefix + ".w2", h, m.P(prefix + ".w2"),
                    m.P(prefix + ".b2"));
}

Tensor LnP(const AsrModel& m, const std::string& prefix, const Tensor& x) {
  return layer_norm(x, m.P(prefix + ".g"), m.P(prefix + ".b"));
}

}  // namespace

Tensor Encode(const AsrModel& m, const Tensor& features, LinearExec& exec) {
  Check(features.rank() == 2 &&
            features.dim(1) == m.cfg.feat_dim * m.cfg.lfr_m,
        "encode: feature dim mismatch");
  Check(features.dim(0) >= 1, "encode: need at least one frame");
  Tensor x = exec.Apply("in_proj", features, m.P("in_proj.w"),
                        m.P("in_proj.b"));
  x = add(x, positional_encoding(x.dim(0), x.dim(1)));
  for (int i = 0; i < m.cfg.n_enc_layers; ++i) {
    const std::string p = "enc" + std::to_string(i);
    x = add(x, AttentionExec(m, p + ".att", LnP(m, p + ".ln1", x),
                             LnP(m, p + ".ln1", x), m.cfg.n_heads, true,
                             exec));
    x = add(x, FfnExec(m, p + ".ffn", LnP(m, p + ".ln2", x), exec));
  }
  return LnP(m, "enc.ln_out", x);
}

Tensor PredictAlphas(const AsrModel& m, const Tensor& hidden,
                     LinearExec& exec) {
  Check(hidden.rank() == 2 && hidden.dim(1) == m.cfg.d_model,
        "predict_alphas: hidden dim mismatch");
  const Tensor c = relu(conv1d_time(hidden, m.P("pred.conv.w"),
                                    m.P("pred.conv.b"), m.cfg.pred_width));
  const Tensor a =
      sigmoid(exec.Apply("pred.out", c, m.P("pred.out.w"), m.P("pred.out.b")));
  Tensor out({hidden.dim(0)});
  for (int t = 0; t < hidden.dim(0); ++t) out[t] = a.at(t, 0);
  return out;
}

Tensor ScaleAlphas(const Tensor& alphas, float n) {
  Check(n >= 1.0f, "scale_alphas: n must be >= 1");
  double sum = 0.0;
  for (int64_t i = 0; i < alphas.numel(); ++i) sum += alphas[i];
  Check(sum > 0.0, "scale_alphas: weights sum to zero");
  Tensor out(alphas.shape());
  const float s = static_cast<float>(n / sum);
  for (int64_t i = 0; i < alphas.numel(); ++i) out[i] = alphas[i] * s;
  return out;
}

Tensor DecodeNar(const AsrModel& m, const Tensor& embeddings,
                 const Tensor& encoder_hidden, const Tensor& hotword_emb,
                 LinearExec& exec) {
  Check(embeddings.rank() == 2 && embeddings.dim(1) == m.cfg.d_model,
        "decode_nar: embedding dim mismatch");
  Check(embeddings.dim(0) >= 1, "decode_nar: need at least one token");
  Check(hotword_emb.dim(1) == m.cfg.d_model,
        "decode_nar: hotword dim mismatch");
  Tensor x = add(embeddings,
                 positional_encoding(embeddings.dim(0), embeddings.dim(1)));
  for (int i = 0; i < m.cfg.n_dec_layers; ++i) {
    const std::string p = "dec" + std::to_string(i);
    // Bidirectional: no mask on the self-attention scores.
    x = add(x, AttentionExec(m, p + ".att", LnP(m, p + ".ln1", x),
                             LnP(m, p + ".ln1", x), m.cfg.n_heads, true,
                             exec));
    x = add(x, FfnExec(m, p + ".ffn", LnP(m, p + ".ln2", x), exec));
  }
  const Tensor& es_prime = x;
  const Tensor o =
      ContextualLayer(m, es_prime, encoder_hidden, hotword_emb, exec);
  const Tensor y = LnP(m, "dec.ln_out", add(es_prime, o));
  return exec.Apply("out", y, m.P("out.w"), m.P("out.b"));
}

std::vector<int> GreedyDecode(const Tensor& logits) {
  return argmax_rows(logits);
}

Tensor UpsampleAlphas(const AsrModel& m, const Tensor& hidden,
                      LinearExec& exec) {
  Check(hidden.rank() == 2 && hidden.dim(1) == m.cfg.d_model,
        "upsample_alphas: hidden dim mismatch");
  const Tensor up = relu(tconv1d_time(hidden, m.P("ts.tconv.w"),
                                      m.P("ts.tconv.b"), m.cfg.upsample_rate));
  const Tensor hs = lstm_seq(
      up, {m.P("ts.lstm.wx"), m.P("ts.lstm.wh"), m.P("ts.lstm.b")});
  const Tensor a =
      sigmoid(exec.Apply("ts.out", hs, m.P("ts.out.w"), m.P("ts.out.b")));
  Tensor out({up.dim(0)});
  for (int t = 0; t < up.dim(0); ++t) out[t] = a.at(t, 0);
  return out;
}

TimestampOutput TimestampsFromAlphas(const Tensor& alphas2, int n_tokens,
                                     int frame_shift_ms,
                                     float silence_threshold) {
  Check(n_tokens >= 0, "timestamps: negative token count");
  Check(frame_shift_ms >= 1, "timestamps: bad frame shift");
  TimestampOutput out;
  out.alphas2 = alphas2;
  const int t = static_cast<int>(alphas2.numel());
  if (t == 0) {
    Check(n_tokens == 0, "timestamps: tokens but no frames");
    return out;
  }
  if (n_tokens == 0) {
    out.spans.push_back({kSilenceId, 0, t * frame_shift_ms});
    return out;
  }

  Check(n_tokens <= t, "timestamps: more tokens than frames");

  // Fire boundaries of the rescaled weights; the final fire is pinned to
  // the last frame so the spans always cover the timeline.
  const Tensor scaled = ScaleAlphas(alphas2, static_cast<float>(n_tokens));
  std::vector<int> fires;
  float acc = 0.0f;
  for (int f = 0; f < t && static_cast<int>(fires.size()) < n_tokens; ++f) {
    acc += scaled[f];
    while (acc >= 1.0f && static_cast<int>(fires.size()) < n_tokens) {
      acc -= 1.0f;
      fires.push_back(f);
    }
  }
  while (static_cast<int>(fires.size()) < n_tokens) fires.push_back(t - 1);
  fires.back() = t - 1;
  // A frame can absorb several fires when its scaled weight exceeds 1;
  // spread those out so every token keeps at least one frame. The upper
  // bound t-1-(n-1-k) leaves room for the tokens still to come, so the
  // strictly-increasing pass below is always feasible (n_tokens <= t).
  for (int k = 0; k < n_tokens; ++k)
    fires[k] = std::min(fires[k], t - 1 - (n_tokens - 1 - k));
  for (int k = 1; k < n_tokens; ++k)
    fires[k] = std::max(fires[k], fires[k - 1] + 1);

  // Token k owns frames (fire_{k-1}, fire_k]; low-weight edge runs are
  // carved off as silence, but each token keeps at least one frame.
  auto add_silence = [&](int lo_frame, int hi_frame) {
    if (lo_frame >= hi_frame) return;
    const int start = lo_frame * frame_shift_ms,
              end = hi_frame * frame_shift_ms;
    if (!out.spans.empty() && out.spans.back().token_id == kSilenceId &&
        out.spans.back().end_ms == start) {
      out.spans.back().end_ms = end;
    } else {
      out.spans.push_back({kSilenceId, start, end});
    }
  };
  int prev = -1;
  for (int k = 0; k < n_tokens; ++k) {
    const int begin = prev + 1, end = fires[k] + 1;
    int lo = begin, hi = end;
    while (lo < hi - 1 && alphas2[lo] < silence_threshold) ++lo;
    while (hi - 1 > lo && alphas2[hi - 1] < silence_threshold) --hi;
    add_silence(begin, lo);
    out.spans.push_back({k, lo * frame_shift_ms, hi * frame_shift_ms});
    add_silence(hi, end);
    prev = fires[k];
  }
  return out;
}

double Aas(const std::vector<TokenSpan>& predicted, const Alignment& reference,
           int ref_frame_shift_ms) {
  std::vector<const TokenSpan*> pred;
  for (const TokenSpan& s : predicted)
    if (s.token_id != kSilenceId) pred.push_back(&s);
  std::vector<const AlignSpan*> ref;
  for (const AlignSpan& s : reference)
    if (s.token_id != kSilenceId) ref.push_back(&s);
  Check(pred.size() == ref.size(), "aas: token count mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    sum += std::fabs(pred[i]->start_ms -
                     ref[i]->start_frame * ref_frame_shift_ms);
    sum += std::fabs(pred[i]->end_ms - ref[i]->end_frame * ref_frame_shift_ms);
  }
  return sum / (2.0 * static_cast<double>(pred.size()));
}

Tensor GlancingSample(const Tensor& acoustic, const std::vector<int>& first,
                      const std::vector<int>& target,
                      const Tensor& embed_table, float lambda, Rng& rng,
                      std::vector<uint8_t>* replaced) {
  const int n = acoustic.dim(0);
  Check(static_cast<int>(first.size()) == n &&
            static_cast<int>(target.size()) == n,
        "glancing: token length mismatch");
  Check(lambda >= 0.0f && lambda <= 1.0f, "glancing: lambda out of range");
  int d = 0;
  for (int i = 0; i < n; ++i) d += first[i] != target[i];
  const int r = static_cast<int>(std::ceil(static_cast<double>(lambda) * d));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < r; ++i)  // partial Fisher-Yates: r distinct picks
    std::swap(order[i], order[i + rng.uniform_int(n - i)]);

  Tensor out = acoustic;
  if (replaced) replaced->assign(n, 0);
  for (int i = 0; i < r; ++i) {
    const int pos = order[i];
    Check(target[pos] >= 0 && target[pos] < embed_table.dim(0),
          "glancing: target id out of range");
    for (int c = 0; c < acoustic.dim(1); ++c)
      out.at(pos, c) = embed_table.at(target[pos], c);
    if (replaced) (*replaced)[pos] = 1;
  }
  return out;
}

namespace {

double CrossEntropy(const Tensor& logits, const std::vector<int>& targets,
                    float smoothing) {
  const int n = logits.dim(0), v = logits.dim(1);
  Check(static_cast<int>(targets.size()) == n, "loss: target length mismatch");
  const Tensor p = softmax(logits);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Check(targets[i] >= 0 && targets[i] < v, "loss: target id out of range");
    const double uniform = smoothing / v;
    for (int c = 0; c < v; ++c) {
      const double q = uniform + (c == targets[i] ? 1.0 - smoothing : 0.0);
      total -= q * std::log(std::max(static_cast<double>(p.at(i, c)), 1e-30));
    }
  }
  return total / n;
}

}  // namespace

LossParts ParaformerLoss(const Tensor& first_logits,
                         const Tensor& second_logits, const Tensor& alphas,
                         const std::vector<int>& targets, float gamma,
                         float smoothing) {
  LossParts parts;
  parts.ce_first = CrossEntropy(first_logits, targets, smoothing);
  parts.ce_second = CrossEntropy(second_logits, targets, smoothing);
  double sum = 0.0;
  for (int64_t i = 0; i < alphas.numel(); ++i) sum += alphas[i];
  parts.quantity = std::fabs(sum - static_cast<double>(targets.size()));
  parts.total = parts.ce_first + parts.ce_second + gamma * parts.quantity;
  return parts;
}

}  // namespace tinyasr
